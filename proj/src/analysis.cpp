#include "respetri/analysis.hpp"

#include <algorithm>
#include <deque>
#include <thread>

#include "net_data.hpp"

namespace respetri {

std::optional<NodeId> ReachGraph::find(const Marking& m) const {
  auto it = index.find(m);
  if (it == index.end()) return std::nullopt;
  return it->second;
}

namespace {

bool beyond_bound(const Net& net, const Marking& m, Tokens limit) {
  for (PlaceIndex p = 0; p < m.tokens.size(); ++p)
    if (m.tokens[p] > limit && !net.capacity(p)) return true;
  return std::any_of(m.counters.begin(), m.counters.end(), [&](Tokens c) { return c > limit; });
}

struct Expansion {
  std::vector<std::pair<TransitionIndex, Marking>> successors;
  bool cut = false;
};

void expand_range(const Net& net, const ReachGraph& g, const std::vector<NodeId>& level, std::size_t begin,
                  std::size_t end, Tokens limit, std::vector<Expansion>& out) {
  const auto& data = net.data();
  for (std::size_t i = begin; i < end; ++i) {
    const Marking& m = g.nodes[level[i]];
    Expansion& e = out[i];
    for (TransitionIndex t = 0; t < net.transition_count(); ++t) {
      if (!is_enabled(net, m, t)) continue;
      Marking next = detail::fire_unchecked(data, m, t);
      if (beyond_bound(net, next, limit)) {
        e.cut = true;
        continue;
      }
      e.successors.emplace_back(t, std::move(next));
    }
  }
}

constexpr std::size_t min_chunk = 32;

}  // namespace

ReachGraph explore(const Net& net, const ExplorationBound& bound, unsigned workers) {
  ReachGraph g;
  g.bound = bound;
  auto add_node = [&](Marking m, std::size_t depth, NodeId parent, TransitionIndex via) {
    const auto id = static_cast<NodeId>(g.nodes.size());
    g.index.emplace(m, id);
    g.nodes.push_back(std::move(m));
    g.depth.push_back(depth);
    g.parent.push_back(parent);
    g.parent_transition.push_back(via);
    return id;
  };
  add_node(net.initial_marking(), 0, 0, 0);

  std::vector<NodeId> level{0};
  std::size_t depth = 0;
  workers = std::max(1u, workers);
  while (!level.empty()) {
    if (depth >= bound.max_depth) {
      for (NodeId n : level)
        if (!enabled_set(net, g.nodes[n]).empty()) g.truncated = true;
      break;
    }
    std::vector<Expansion> expansions(level.size());
    const std::size_t chunks = std::min<std::size_t>(workers, (level.size() + min_chunk - 1) / min_chunk);
    if (chunks <= 1) {
      expand_range(net, g, level, 0, level.size(), bound.max_tokens_per_place, expansions);
    } else {
      std::vector<std::thread> pool;
      const std::size_t per = (level.size() + chunks - 1) / chunks;
      for (std::size_t c = 0; c < chunks; ++c) {
        const std::size_t begin = c * per, end = std::min(level.size(), begin + per);
        if (begin >= end) break;
        pool.emplace_back([&, begin, end] {
          expand_range(net, g, level, begin, end, bound.max_tokens_per_place, expansions);
        });
      }
      for (auto& th : pool) th.join();
    }

    std::vector<NodeId> next;
    for (std::size_t i = 0; i < level.size(); ++i) {
      if (expansions[i].cut) g.truncated = true;
      for (auto& [t, m] : expansions[i].successors) {
        if (auto it = g.index.find(m); it != g.index.end()) {
          g.edges.push_back({level[i], t, it->second});
          continue;
        }
        if (g.nodes.size() >= bound.max_states) {
          g.truncated = true;
          continue;
        }
        const NodeId id = add_node(std::move(m), depth + 1, level[i], t);
        g.edges.push_back({level[i], t, id});
        next.push_back(id);
      }
    }
    level = std::move(next);
    ++depth;
  }
  return g;
}

std::optional<ViolationTrace> violation_trace(const Net& net, const ReachGraph& graph,
                                              const CompiledPredicate& pred) {
  for (NodeId n = 0; n < graph.nodes.size(); ++n) {
    if (!pred(graph.nodes[n])) continue;
    ViolationTrace trace;
    for (NodeId cur = n; cur != 0; cur = graph.parent[cur]) {
      trace.firings.push_back(net.transition_id(graph.parent_transition[cur]));
      trace.markings.push_back(graph.nodes[cur]);
    }
    trace.markings.push_back(graph.nodes[0]);
    std::reverse(trace.firings.begin(), trace.firings.end());
    std::reverse(trace.markings.begin(), trace.markings.end());
    return trace;
  }
  return std::nullopt;
}

std::optional<SafeProof> Verdict::safe_proof() const {
  if (kind != VerdictKind::Safe) return std::nullopt;
  if (const auto* p = std::get_if<SafeProof>(&proof)) return *p;
  return std::nullopt;
}

std::string_view to_string(VerdictKind kind) noexcept {
  switch (kind) {
    case VerdictKind::Safe: return "Safe";
    case VerdictKind::Unsafe: return "Unsafe";
    case VerdictKind::Unknown: return "Unknown";
  }
  return "?";
}

std::string_view to_string(SafeProof proof) noexcept {
  return proof == SafeProof::ExhaustiveBounded ? "ExhaustiveBounded" : "Coverability";
}

std::string describe(const Verdict& v) {
  switch (v.kind) {
    case VerdictKind::Safe: return "Safe/" + std::string(to_string(*v.safe_proof()));
    case VerdictKind::Unsafe: return "Unsafe";
    case VerdictKind::Unknown: return "Unknown/BoundExhausted";
  }
  return "?";
}

Verdict check_predicate(const Net& net, const ReachGraph& graph, const Predicate& pred, std::string name) {
  const CompiledPredicate compiled = net.compile(pred);
  Verdict v;
  v.checked_predicate = std::move(name);
  v.states_explored = graph.nodes.size();
  v.truncated = graph.truncated;
  if (auto trace = violation_trace(net, graph, compiled)) {
    v.kind = VerdictKind::Unsafe;
    v.proof = std::move(*trace);
    return v;
  }
  if (!graph.truncated) {
    v.kind = VerdictKind::Safe;
    v.proof = SafeProof::ExhaustiveBounded;
    return v;
  }
  if (net.is_monotone() && is_upward_closed(pred) && !mentions_counters_or_modes(pred)) {
    const CoverabilityResult km = karp_miller(net, pred, v.checked_predicate);
    if (km.verdict.safe()) {
      v.kind = VerdictKind::Safe;
      v.proof = SafeProof::Coverability;
      return v;
    }
  }
  v.kind = VerdictKind::Unknown;
  v.proof = BoundExhausted{graph.nodes.size(), graph.depth.empty() ? 0 : graph.depth.back()};
  return v;
}

Verdict check_predicate(const Net& net, const Predicate& pred, std::string name, const ExplorationBound& bound,
                        unsigned workers) {
  net.compile(pred);  // reject unknown references before exploring
  return check_predicate(net, explore(net, bound, workers), pred, std::move(name));
}

Verdict check_forbidden(const Net& net, std::string_view name, const ExplorationBound& bound, unsigned workers) {
  auto it = net.model().forbidden.find(std::string(name));
  if (it == net.model().forbidden.end()) throw UnknownPredicate(std::string(name));
  return check_predicate(net, it->second, it->first, bound, workers);
}

PressureMap pressure_map(const ReachGraph& graph, const CompiledPredicate& pred) {
  PressureMap pm;
  pm.truncated = graph.truncated;
  pm.distance.assign(graph.nodes.size(), std::nullopt);
  std::vector<std::vector<NodeId>> reverse(graph.nodes.size());
  for (const auto& e : graph.edges) reverse[e.to].push_back(e.from);
  std::deque<NodeId> queue;
  for (NodeId n = 0; n < graph.nodes.size(); ++n) {
    if (pred(graph.nodes[n])) {
      pm.distance[n] = 0;
      queue.push_back(n);
    }
  }
  while (!queue.empty()) {
    const NodeId n = queue.front();
    queue.pop_front();
    for (NodeId from : reverse[n]) {
      if (pm.distance[from]) continue;
      pm.distance[from] = *pm.distance[n] + 1;
      queue.push_back(from);
    }
  }
  return pm;
}

Pressure reachability_pressure(const ReachGraph& graph, const Marking& m, const CompiledPredicate& pred) {
  const auto node = graph.find(m);
  if (!node) throw NodeNotInGraph("marking is not a node of the explored graph");
  return {pressure_map(graph, pred).distance[*node], graph.truncated};
}

}  // namespace respetri
