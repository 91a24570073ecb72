#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "respetri/errors.hpp"
#include "respetri/predicate.hpp"

namespace respetri {

using Tokens = std::uint32_t;
using PlaceIndex = std::uint32_t;
using TransitionIndex = std::uint32_t;

enum class ArcRole : std::uint8_t { Input, Output, Inhibitor, Read };

std::string_view to_string(ArcRole role) noexcept;

/// One arc between a transition and `place`. For inhibitor arcs `weight` is
/// the blocking threshold.
struct Arc {
  std::string place;
  Tokens weight = 1;

  friend auto operator<=>(const Arc&, const Arc&) = default;
};

struct PlaceDef {
  std::string id;
  Tokens initial = 0;
  std::optional<Tokens> capacity;
  std::string label;

  friend bool operator==(const PlaceDef&, const PlaceDef&) = default;
};

struct TransitionDef {
  std::string id;
  std::vector<Arc> inputs;
  std::vector<Arc> outputs;
  std::vector<Arc> inhibitors;
  std::vector<Arc> reads;
  std::optional<Predicate> guard;
  bool counted = false;
  std::string label;

  std::vector<Arc>& arcs(ArcRole role);
  const std::vector<Arc>& arcs(ArcRole role) const;

  friend bool operator==(const TransitionDef&, const TransitionDef&) = default;
};

/// A policy mode. Every mode owns a place `mode_<id>`; exactly one of them
/// holds a token. `disabled` transitions are blocked structurally while the
/// mode is active; `guard_overrides` replace a transition's guard.
struct ModeDef {
  std::string id;
  std::map<std::string, Predicate> guard_overrides;
  std::set<std::string> disabled;

  friend bool operator==(const ModeDef&, const ModeDef&) = default;
};

std::string mode_place_id(std::string_view mode);

struct CounterThreshold {
  std::string transition;
  std::int64_t threshold = 0;  // alarm while #(t) > threshold
  friend bool operator==(const CounterThreshold&, const CounterThreshold&) = default;
};

struct RateThreshold {
  std::string transition;
  std::int64_t max_count = 0;  // alarm while firings in the window > max_count
  std::int64_t window = 1;
  friend bool operator==(const RateThreshold&, const RateThreshold&) = default;
};

struct OccupancyThreshold {
  std::string place;
  Cmp cmp = Cmp::Ge;
  std::int64_t level = 0;
  friend bool operator==(const OccupancyThreshold&, const OccupancyThreshold&) = default;
};

struct PressureThreshold {
  std::string predicate;  // name of a forbidden predicate
  std::int64_t max_distance = 0;  // alarm while pressure <= max_distance
  friend bool operator==(const PressureThreshold&, const PressureThreshold&) = default;
};

struct AuditRule {
  std::string id;
  std::variant<CounterThreshold, RateThreshold, OccupancyThreshold, PressureThreshold> kind;

  friend bool operator==(const AuditRule&, const AuditRule&) = default;
};

/// Declarative net structure. Places and transitions keep declaration
/// order, which is the canonical order for enabling and exploration.
struct NetModel {
  std::vector<PlaceDef> places;
  std::vector<TransitionDef> transitions;
  std::map<std::string, Predicate> forbidden;
  std::map<std::string, AuditRule> audit_rules;
  std::map<std::string, ModeDef> modes;
  std::map<std::string, std::string> metadata;

  const PlaceDef* find_place(std::string_view id) const;
  PlaceDef* find_place(std::string_view id);
  const TransitionDef* find_transition(std::string_view id) const;
  TransitionDef* find_transition(std::string_view id);

  /// Exact equality, declaration order included.
  friend bool operator==(const NetModel&, const NetModel&) = default;
};

/// Equality up to declaration order and arc order.
bool structurally_equal(const NetModel& a, const NetModel& b);

struct StructureError {
  enum class Rule : std::uint8_t {
    DuplicateId,
    InvalidIdentifier,
    UnknownEndpoint,
    InvalidWeight,
    InvalidCapacity,
    InitialExceedsCapacity,
    ConflictingArcRoles,
    DuplicateArc,
    UnknownReference,
    InvalidMode,
    InvalidAuditRule,
  };

  Rule rule;
  std::string subject;
  std::string message;

  friend bool operator==(const StructureError& a, const StructureError& b) {
    return a.rule == b.rule && a.subject == b.subject;
  }
};

std::string_view to_string(StructureError::Rule rule) noexcept;

/// Empty iff every structural invariant holds.
std::vector<StructureError> validate_net(const NetModel& model);

class ModelInvalid : public Error {
 public:
  explicit ModelInvalid(std::vector<StructureError> errors);
  const std::vector<StructureError>& errors() const noexcept { return errors_; }

 private:
  std::vector<StructureError> errors_;
};

/// Token counts per place (declaration order) and firing counters per
/// counted transition (declaration order of the counted transitions).
struct Marking {
  std::vector<Tokens> tokens;
  std::vector<Tokens> counters;

  friend auto operator<=>(const Marking&, const Marking&) = default;
};

struct MarkingHash {
  std::size_t operator()(const Marking& m) const noexcept;
};

namespace detail {
struct NetData;
struct CompiledPredicateNode;
}  // namespace detail

/// A predicate resolved against one net. Cheap to copy.
class CompiledPredicate {
 public:
  CompiledPredicate() = default;
  explicit CompiledPredicate(std::shared_ptr<const detail::CompiledPredicateNode> root)
      : root_(std::move(root)) {}

  bool operator()(const Marking& m) const;

  /// Evaluates over a bare token vector (counters read as zero). Used by
  /// coverability, where the largest Tokens value stands for omega.
  bool evaluate_tokens(const std::vector<Tokens>& tokens) const;

 private:
  std::shared_ptr<const detail::CompiledPredicateNode> root_;
};

/// Validated, index-resolved view of a NetModel. Immutable and cheap to copy.
class Net {
 public:
  /// Throws ModelInvalid when validate_net reports errors.
  explicit Net(NetModel model);

  const NetModel& model() const noexcept;

  std::size_t place_count() const noexcept;
  std::size_t transition_count() const noexcept;
  std::size_t counter_count() const noexcept;

  const std::string& place_id(PlaceIndex p) const;
  const std::string& transition_id(TransitionIndex t) const;
  std::optional<PlaceIndex> find_place(std::string_view id) const;
  std::optional<TransitionIndex> find_transition(std::string_view id) const;
  /// Throws UnknownTransition.
  TransitionIndex transition_index(std::string_view id) const;
  /// Counter slot of a counted transition, if any.
  std::optional<std::size_t> counter_slot(TransitionIndex t) const;
  /// Transition owning counter slot `slot`.
  TransitionIndex counter_transition(std::size_t slot) const;

  Marking initial_marking() const;

  /// Throws UnknownReference.
  CompiledPredicate compile(const Predicate& p) const;
  /// Compiles the named forbidden predicate; throws UnknownReference.
  CompiledPredicate forbidden(std::string_view name) const;

  /// True when no inhibitor, capacity, non-upward guard or mode override
  /// can make a transition disabled by adding tokens.
  bool is_monotone() const noexcept;

  /// Declared capacity of `p`, if any.
  std::optional<Tokens> capacity(PlaceIndex p) const;

  const detail::NetData& data() const noexcept { return *data_; }

 private:
  std::shared_ptr<const detail::NetData> data_;
};

bool is_enabled(const Net& net, const Marking& m, TransitionIndex t);
/// Throws UnknownTransition.
bool is_enabled(const Net& net, const Marking& m, std::string_view t);

/// Enabled transitions in declaration order.
std::vector<TransitionIndex> enabled_set(const Net& net, const Marking& m);

/// Throws NotEnabled.
Marking fire(const Net& net, const Marking& m, TransitionIndex t);
/// Throws UnknownTransition or NotEnabled.
Marking fire(const Net& net, const Marking& m, std::string_view t);

/// Throws UnknownReference.
bool eval_guard(const Net& net, const Predicate& pred, const Marking& m);

/// Builds a marking from a place->tokens map; unnamed places get 0.
Marking make_marking(const Net& net, const std::map<std::string, Tokens>& tokens,
                     const std::map<std::string, Tokens>& counters = {});

Tokens tokens_at(const Net& net, const Marking& m, std::string_view place);
Tokens counter_of(const Net& net, const Marking& m, std::string_view transition);

/// Human-readable `{p1:2, p3:1 | #t2:1}` rendering of the nonzero entries.
std::string format_marking(const Net& net, const Marking& m);

}  // namespace respetri
