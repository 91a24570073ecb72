#pragma once

// Glue between the library and the reference oracle.

#include <set>
#include <string>
#include <tuple>

#include "oracle.hpp"
#include "respetri/analysis.hpp"
#include "respetri/net.hpp"

namespace harness {

using namespace respetri;

inline oracle::State to_state(const Net& net, const Marking& m) {
  oracle::State s;
  for (PlaceIndex p = 0; p < net.place_count(); ++p) s.tokens[net.place_id(p)] = m.tokens[p];
  for (std::size_t c = 0; c < net.counter_count(); ++c)
    s.counters[net.transition_id(net.counter_transition(c))] = m.counters[c];
  return s;
}

/// Bound under which explore is limited only by the token cut.
inline ExplorationBound token_bound(Tokens limit) {
  ExplorationBound b;
  b.max_states = 50'000'000;
  b.max_depth = 50'000'000;
  b.max_tokens_per_place = limit;
  return b;
}

struct GraphSets {
  std::set<oracle::State> states;
  std::set<std::tuple<oracle::State, std::string, oracle::State>> edges;
};

inline GraphSets graph_sets(const Net& net, const ReachGraph& g) {
  GraphSets out;
  for (const auto& m : g.nodes) out.states.insert(to_state(net, m));
  for (const auto& e : g.edges)
    out.edges.emplace(to_state(net, g.nodes[e.from]), net.transition_id(e.transition), to_state(net, g.nodes[e.to]));
  return out;
}

/// True when explore and the oracle agree on nodes, edges and truncation.
inline bool same_graph(const Net& net, const ReachGraph& g, const oracle::Enumeration& e) {
  const GraphSets s = graph_sets(net, g);
  return s.states == e.states && s.edges == e.edges && g.truncated == e.truncated &&
         s.states.size() == g.nodes.size() && s.edges.size() == g.edges.size();
}

/// Replays a trace from the initial marking; true when every step is
/// enabled, the recorded markings match and the last one satisfies `pred`.
inline bool replays(const Net& net, const ViolationTrace& trace, const CompiledPredicate& pred) {
  Marking m = net.initial_marking();
  if (trace.markings.size() != trace.firings.size() + 1 || trace.markings.front() != m) return false;
  for (std::size_t i = 0; i < trace.firings.size(); ++i) {
    if (!is_enabled(net, m, trace.firings[i])) return false;
    m = fire(net, m, trace.firings[i]);
    if (m != trace.markings[i + 1]) return false;
  }
  return pred(m);
}

}  // namespace harness
