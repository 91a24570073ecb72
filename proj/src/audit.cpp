#include "respetri/audit.hpp"

#include <algorithm>
#include <limits>
#include <random>

#include "net_data.hpp"

namespace respetri {

namespace {

// Uniform index in [0, n) by rejection, independent of the standard
// library's distribution implementation.
std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t range = n;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t draw;
  do {
    draw = rng();
  } while (draw >= limit);
  return static_cast<std::size_t>(draw % range);
}

struct Chooser {
  const Net& net;
  std::mt19937_64 rng;
  std::vector<TransitionIndex> priority;

  std::optional<TransitionIndex> operator()(const std::vector<TransitionIndex>& enabled) {
    if (enabled.empty()) return std::nullopt;
    for (TransitionIndex t : priority)
      if (std::binary_search(enabled.begin(), enabled.end(), t)) return t;
    return enabled[uniform_index(rng, enabled.size())];
  }
};

}  // namespace

RunRecord simulate(const Net& net, const SimPolicy& policy, std::size_t steps) {
  RunRecord run;
  run.markings.push_back(net.initial_marking());

  if (const auto* script = std::get_if<Scripted>(&policy)) {
    const std::size_t n = std::min(steps, script->firings.size());
    for (std::size_t i = 0; i < n; ++i) {
      const TransitionIndex t = net.transition_index(script->firings[i]);
      if (!is_enabled(net, run.markings.back(), t)) throw ScriptedFiringDisabled(i + 1, script->firings[i]);
      run.markings.push_back(detail::fire_unchecked(net.data(), run.markings.back(), t));
      run.firings.push_back(script->firings[i]);
    }
  } else {
    Chooser choose{net, std::mt19937_64{}, {}};
    if (const auto* random = std::get_if<UniformRandom>(&policy)) {
      choose.rng.seed(random->seed);
    } else {
      const auto& prio = std::get<Priority>(policy);
      choose.rng.seed(prio.seed);
      for (const auto& id : prio.order) choose.priority.push_back(net.transition_index(id));
    }
    for (std::size_t i = 0; i < steps; ++i) {
      const auto t = choose(enabled_set(net, run.markings.back()));
      if (!t) {
        run.deadlock_step = i;
        break;
      }
      run.markings.push_back(detail::fire_unchecked(net.data(), run.markings.back(), *t));
      run.firings.push_back(net.transition_id(*t));
    }
  }
  run.alarms = evaluate_audit_rules(net, run);
  return run;
}

std::vector<Alarm> evaluate_audit_rules(const Net& net, const RunRecord& run, const ReachGraph* graph) {
  const auto& rules = net.model().audit_rules;
  const bool needs_graph = std::any_of(rules.begin(), rules.end(), [](const auto& r) {
    return std::holds_alternative<PressureThreshold>(r.second.kind);
  });
  std::optional<ReachGraph> owned;
  if (needs_graph && graph == nullptr) {
    owned = explore(net);
    graph = &*owned;
  }

  std::vector<Alarm> alarms;
  for (const auto& [id, rule] : rules) {
    std::visit(
        [&](const auto& k) {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, CounterThreshold>) {
            std::int64_t count = 0;
            for (std::size_t s = 0; s < run.markings.size(); ++s) {
              if (s > 0 && run.firings[s - 1] == k.transition) ++count;
              if (count > k.threshold) alarms.push_back({s, id, count});
            }
          } else if constexpr (std::is_same_v<K, RateThreshold>) {
            for (std::size_t s = 0; s < run.markings.size(); ++s) {
              std::int64_t count = 0;
              const std::size_t from = s >= static_cast<std::size_t>(k.window) ? s - k.window + 1 : 1;
              for (std::size_t f = from; f <= s; ++f)
                if (run.firings[f - 1] == k.transition) ++count;
              if (count > k.max_count) alarms.push_back({s, id, count});
            }
          } else if constexpr (std::is_same_v<K, OccupancyThreshold>) {
            for (std::size_t s = 0; s < run.markings.size(); ++s) {
              const std::int64_t tokens = tokens_at(net, run.markings[s], k.place);
              if (compare(tokens, k.cmp, k.level)) alarms.push_back({s, id, tokens});
            }
          } else {
            const PressureMap pm = pressure_map(*graph, net.forbidden(k.predicate));
            for (std::size_t s = 0; s < run.markings.size(); ++s) {
              const auto node = graph->find(run.markings[s]);
              if (!node || !pm.distance[*node]) continue;
              const auto d = static_cast<std::int64_t>(*pm.distance[*node]);
              if (d <= k.max_distance) alarms.push_back({s, id, d});
            }
          }
        },
        rule.kind);
  }
  std::stable_sort(alarms.begin(), alarms.end(), [](const Alarm& a, const Alarm& b) {
    return a.step != b.step ? a.step < b.step : a.rule < b.rule;
  });
  return alarms;
}

std::vector<ApproachEpisode> approach_episodes(const std::vector<std::optional<std::size_t>>& series) {
  auto decreasing = [](const std::optional<std::size_t>& a, const std::optional<std::size_t>& b) {
    if (!b) return false;
    return !a || *b < *a;
  };
  std::vector<ApproachEpisode> out;
  std::size_t start = 0;
  for (std::size_t i = 1; i <= series.size(); ++i) {
    if (i < series.size() && decreasing(series[i - 1], series[i])) continue;
    if (i - start >= 3) out.push_back({start, i - 1});
    start = i;
  }
  return out;
}

DriftReport drift_report(const Net& net, const RunRecord& run, const Predicate& pred, std::string name,
                         const ReachGraph& graph) {
  const CompiledPredicate compiled = net.compile(pred);
  const PressureMap pm = pressure_map(graph, compiled);
  DriftReport report;
  report.predicate = std::move(name);
  report.graph_truncated = graph.truncated;
  for (std::size_t s = 0; s < run.markings.size(); ++s) {
    const auto node = graph.find(run.markings[s]);
    if (!node)
      throw PressureUnavailable("marking at step " + std::to_string(s) + " lies outside the explored graph");
    report.series.push_back(pm.distance[*node]);
    if (!report.first_violation_step && compiled(run.markings[s])) report.first_violation_step = s;
  }
  report.episodes = approach_episodes(report.series);
  return report;
}

DriftReport drift_report(const Net& net, const RunRecord& run, const std::string& forbidden_name) {
  auto it = net.model().forbidden.find(forbidden_name);
  if (it == net.model().forbidden.end()) throw UnknownPredicate(forbidden_name);
  return drift_report(net, run, it->second, forbidden_name, explore(net));
}

}  // namespace respetri
