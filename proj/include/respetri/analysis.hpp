#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "respetri/errors.hpp"
#include "respetri/net.hpp"

namespace respetri {

struct ExplorationBound {
  std::size_t max_states = 1'000'000;
  std::size_t max_depth = 10'000;
  Tokens max_tokens_per_place = 64;

  friend bool operator==(const ExplorationBound&, const ExplorationBound&) = default;
};

using NodeId = std::uint32_t;

struct ReachEdge {
  NodeId from;
  TransitionIndex transition;
  NodeId to;

  friend auto operator<=>(const ReachEdge&, const ReachEdge&) = default;
};

/// Explored marking graph. Nodes are numbered in breadth-first discovery
/// order, so node 0 is the root and depths are nondecreasing in the id.
struct ReachGraph {
  std::vector<Marking> nodes;
  std::vector<std::size_t> depth;
  // Breadth-first tree: the first edge that discovered each node.
  std::vector<NodeId> parent;
  std::vector<TransitionIndex> parent_transition;
  std::vector<ReachEdge> edges;
  bool truncated = false;
  ExplorationBound bound;

  const Marking& root() const { return nodes.front(); }
  std::optional<NodeId> find(const Marking& m) const;

  std::unordered_map<Marking, NodeId, MarkingHash> index;
};

/// Breadth-first exploration in canonical transition order. Markings with
/// an uncapacitated place (or a counter) above `max_tokens_per_place` are
/// cut from the frontier. With `workers` > 1 each level is expanded in
/// parallel; the result is identical to the single-worker graph.
ReachGraph explore(const Net& net, const ExplorationBound& bound = {}, unsigned workers = 1);

struct ViolationTrace {
  std::vector<std::string> firings;
  std::vector<Marking> markings;

  friend bool operator==(const ViolationTrace&, const ViolationTrace&) = default;
};

/// Shortest trace from the root to a node satisfying `pred`, ties broken by
/// canonical transition order.
std::optional<ViolationTrace> violation_trace(const Net& net, const ReachGraph& graph,
                                              const CompiledPredicate& pred);

enum class VerdictKind : std::uint8_t { Safe, Unsafe, Unknown };
enum class SafeProof : std::uint8_t { ExhaustiveBounded, Coverability };

struct BoundExhausted {
  std::size_t states = 0;
  std::size_t max_depth_reached = 0;

  friend bool operator==(const BoundExhausted&, const BoundExhausted&) = default;
};

struct Verdict {
  VerdictKind kind = VerdictKind::Unknown;
  std::variant<SafeProof, ViolationTrace, BoundExhausted> proof = BoundExhausted{};
  std::string checked_predicate;
  std::size_t states_explored = 0;
  bool truncated = false;

  bool safe() const noexcept { return kind == VerdictKind::Safe; }
  bool unsafe() const noexcept { return kind == VerdictKind::Unsafe; }
  const ViolationTrace* trace() const { return std::get_if<ViolationTrace>(&proof); }
  std::optional<SafeProof> safe_proof() const;

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

std::string_view to_string(VerdictKind kind) noexcept;
std::string_view to_string(SafeProof proof) noexcept;
/// `Safe/ExhaustiveBounded`, `Unsafe`, `Unknown/BoundExhausted`.
std::string describe(const Verdict& v);

class UnknownPredicate : public Error {
 public:
  explicit UnknownPredicate(const std::string& name)
      : Error("unknown forbidden predicate '" + name + "'"), name_(name) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

/// Checks the named forbidden predicate. Throws UnknownPredicate.
Verdict check_forbidden(const Net& net, std::string_view name, const ExplorationBound& bound = {},
                        unsigned workers = 1);

/// Same as check_forbidden for an arbitrary predicate.
Verdict check_predicate(const Net& net, const Predicate& pred, std::string name,
                        const ExplorationBound& bound = {}, unsigned workers = 1);

/// Variant reusing an already explored graph.
Verdict check_predicate(const Net& net, const ReachGraph& graph, const Predicate& pred, std::string name);

// ---- coverability --------------------------------------------------------

inline constexpr Tokens omega = std::numeric_limits<Tokens>::max();

struct CoverNode {
  std::vector<Tokens> tokens;  // `omega` marks an unbounded place
  std::optional<std::size_t> parent;
  std::optional<TransitionIndex> via;
};

struct CoverabilityTree {
  std::vector<CoverNode> nodes;
  bool complete = true;
};

struct CoverabilityResult {
  Verdict verdict;
  CoverabilityTree tree;
};

class NotUpwardClosed : public Error {
 public:
  using Error::Error;
};

class NonMonotoneNet : public Error {
 public:
  using Error::Error;
};

/// Karp-Miller tree with omega acceleration. Requires an upward-closed
/// target over token atoms only and a monotone net. An Unsafe verdict
/// carries a concrete covering trace found by unbounded breadth-first
/// search. Exceeding `max_nodes` yields Unknown.
CoverabilityResult karp_miller(const Net& net, const Predicate& target, std::string name = {},
                               std::size_t max_nodes = 200'000);

// ---- pressure ------------------------------------------------------------

class NodeNotInGraph : public Error {
 public:
  using Error::Error;
};

/// Firing distance from every node to the nearest node satisfying the
/// predicate; nullopt means no such node within the explored graph.
struct PressureMap {
  std::vector<std::optional<std::size_t>> distance;
  bool truncated = false;
};

PressureMap pressure_map(const ReachGraph& graph, const CompiledPredicate& pred);

struct Pressure {
  std::optional<std::size_t> distance;
  bool graph_truncated = false;
};

/// Throws NodeNotInGraph.
Pressure reachability_pressure(const ReachGraph& graph, const Marking& m, const CompiledPredicate& pred);

// ---- structure -----------------------------------------------------------

/// Elementary cycles of the place/transition graph, as alternating node ids
/// starting at the smallest id. Read arcs count in both directions.
std::vector<std::vector<std::string>> find_cycles(const NetModel& model, std::size_t max_length = 12);

struct SiphonsAndTraps {
  std::vector<std::vector<std::string>> siphons;
  std::vector<std::vector<std::string>> traps;
};

/// Minimal siphons and traps with at most `max_size` places, each sorted by
/// id; read arcs count as both consuming and producing.
SiphonsAndTraps siphons_and_traps(const NetModel& model, std::size_t max_size);

}  // namespace respetri
