#include <algorithm>
#include <deque>
#include <unordered_map>

#include "net_data.hpp"
#include "respetri/analysis.hpp"

namespace respetri {

namespace {

bool omega_enabled(const detail::CompiledTransition& t, const std::vector<Tokens>& m) {
  for (const auto& a : t.inputs)
    if (m[a.place] < a.weight) return false;
  for (const auto& a : t.reads)
    if (m[a.place] < a.weight) return false;
  return !t.guard || t.guard->evaluate_tokens(m);
}

std::vector<Tokens> omega_fire(const detail::CompiledTransition& t, std::vector<Tokens> m) {
  for (const auto& [p, v] : t.delta)
    if (m[p] != omega) m[p] = static_cast<Tokens>(static_cast<std::int64_t>(m[p]) + v);
  return m;
}

bool covers(const std::vector<Tokens>& big, const std::vector<Tokens>& small) {
  for (std::size_t i = 0; i < big.size(); ++i)
    if (big[i] < small[i]) return false;
  return true;
}

constexpr std::size_t witness_state_limit = 5'000'000;

// Breadth-first search without a token bound, stopping at the first marking
// that satisfies `pred`.
std::optional<ViolationTrace> concrete_witness(const Net& net, const CompiledPredicate& pred) {
  std::vector<Marking> nodes{net.initial_marking()};
  std::vector<std::pair<std::size_t, TransitionIndex>> parent{{0, 0}};
  std::unordered_map<Marking, std::size_t, MarkingHash> seen{{nodes[0], 0}};
  auto build = [&](std::size_t n) {
    ViolationTrace trace;
    for (std::size_t cur = n; cur != 0; cur = parent[cur].first) {
      trace.firings.push_back(net.transition_id(parent[cur].second));
      trace.markings.push_back(nodes[cur]);
    }
    trace.markings.push_back(nodes[0]);
    std::reverse(trace.firings.begin(), trace.firings.end());
    std::reverse(trace.markings.begin(), trace.markings.end());
    return trace;
  };
  if (pred(nodes[0])) return build(0);
  for (std::size_t head = 0; head < nodes.size(); ++head) {
    for (TransitionIndex t = 0; t < net.transition_count(); ++t) {
      if (!is_enabled(net, nodes[head], t)) continue;
      Marking next = detail::fire_unchecked(net.data(), nodes[head], t);
      if (seen.contains(next)) continue;
      if (nodes.size() >= witness_state_limit) return std::nullopt;
      seen.emplace(next, nodes.size());
      nodes.push_back(std::move(next));
      parent.emplace_back(head, t);
      if (pred(nodes.back())) return build(nodes.size() - 1);
    }
  }
  return std::nullopt;
}

}  // namespace

CoverabilityResult karp_miller(const Net& net, const Predicate& target, std::string name, std::size_t max_nodes) {
  if (!is_upward_closed(target) || mentions_counters_or_modes(target))
    throw NotUpwardClosed("coverability target must be upward-closed over token atoms: " + to_string(target));
  if (!net.is_monotone())
    throw NonMonotoneNet("coverability needs a net without inhibitors, capacities or downward guards");

  const CompiledPredicate compiled = net.compile(target);
  const auto& data = net.data();
  CoverabilityResult result;
  auto& tree = result.tree;
  Verdict& v = result.verdict;
  v.checked_predicate = std::move(name);

  tree.nodes.push_back({net.initial_marking().tokens, std::nullopt, std::nullopt});
  std::deque<std::size_t> queue{0};
  bool covered = false;
  while (!queue.empty()) {
    const std::size_t n = queue.front();
    queue.pop_front();
    if (compiled.evaluate_tokens(tree.nodes[n].tokens)) {
      covered = true;
      break;
    }
    bool repeated = false;
    for (auto a = tree.nodes[n].parent; a; a = tree.nodes[*a].parent) {
      if (tree.nodes[*a].tokens == tree.nodes[n].tokens) {
        repeated = true;
        break;
      }
    }
    if (repeated) continue;
    for (TransitionIndex t = 0; t < net.transition_count(); ++t) {
      const auto& ct = data.transitions[t];
      if (!omega_enabled(ct, tree.nodes[n].tokens)) continue;
      std::vector<Tokens> next = omega_fire(ct, tree.nodes[n].tokens);
      for (std::optional<std::size_t> a = n; a; a = tree.nodes[*a].parent) {
        const auto& anc = tree.nodes[*a].tokens;
        if (anc != next && covers(next, anc))
          for (std::size_t p = 0; p < next.size(); ++p)
            if (next[p] > anc[p]) next[p] = omega;
      }
      if (tree.nodes.size() >= max_nodes) {
        tree.complete = false;
        break;
      }
      tree.nodes.push_back({std::move(next), n, t});
      queue.push_back(tree.nodes.size() - 1);
    }
    if (!tree.complete) break;
  }

  v.states_explored = tree.nodes.size();
  if (covered) {
    if (auto trace = concrete_witness(net, compiled)) {
      v.kind = VerdictKind::Unsafe;
      v.proof = std::move(*trace);
      return result;
    }
  } else if (tree.complete) {
    v.kind = VerdictKind::Safe;
    v.proof = SafeProof::Coverability;
    return result;
  }
  v.kind = VerdictKind::Unknown;
  v.truncated = true;
  v.proof = BoundExhausted{tree.nodes.size(), 0};
  return result;
}

}  // namespace respetri
