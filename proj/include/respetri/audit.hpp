#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "respetri/analysis.hpp"
#include "respetri/errors.hpp"
#include "respetri/net.hpp"

namespace respetri {

struct UniformRandom {
  std::uint64_t seed = 0;
};

/// Fires the first enabled transition of `order`; when none of them is
/// enabled, picks uniformly among the enabled set using `seed`.
struct Priority {
  std::vector<std::string> order;
  std::uint64_t seed = 0;
};

struct Scripted {
  std::vector<std::string> firings;
};

using SimPolicy = std::variant<UniformRandom, Priority, Scripted>;

class ScriptedFiringDisabled : public Error {
 public:
  ScriptedFiringDisabled(std::size_t step, std::string transition)
      : Error("scripted firing '" + transition + "' at step " + std::to_string(step) + " is not enabled"),
        step_(step),
        transition_(std::move(transition)) {}
  std::size_t step() const noexcept { return step_; }
  const std::string& transition() const noexcept { return transition_; }

 private:
  std::size_t step_;
  std::string transition_;
};

struct Alarm {
  std::size_t step = 0;
  std::string rule;
  std::int64_t observed = 0;

  friend bool operator==(const Alarm&, const Alarm&) = default;
};

/// Step s (0-based) is the marking after s firings; markings has one more
/// entry than firings.
struct RunRecord {
  std::vector<std::string> firings;
  std::vector<Marking> markings;
  std::optional<std::size_t> deadlock_step;
  std::vector<Alarm> alarms;
  std::optional<std::vector<std::optional<std::size_t>>> pressure_series;

  std::size_t steps() const noexcept { return firings.size(); }
  std::vector<Tokens> counters_at(std::size_t step) const { return markings.at(step).counters; }

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

/// Runs the token game for at most `steps` firings. Alarms are filled by
/// evaluate_audit_rules. Throws ScriptedFiringDisabled.
RunRecord simulate(const Net& net, const SimPolicy& policy, std::size_t steps);

/// Level-triggered alarms for every audit rule at every step where its
/// condition holds, sorted by step then rule id. Pressure rules use `graph`
/// (explored on demand with the default bound when null); steps whose
/// marking lies outside the graph raise no pressure alarm.
std::vector<Alarm> evaluate_audit_rules(const Net& net, const RunRecord& run, const ReachGraph* graph = nullptr);

class PressureUnavailable : public Error {
 public:
  using Error::Error;
};

struct ApproachEpisode {
  std::size_t first_step = 0;
  std::size_t last_step = 0;

  friend bool operator==(const ApproachEpisode&, const ApproachEpisode&) = default;
};

struct DriftReport {
  std::string predicate;
  std::vector<std::optional<std::size_t>> series;  // nullopt: unreachable within the bound
  std::vector<ApproachEpisode> episodes;
  bool graph_truncated = false;
  std::optional<std::size_t> first_violation_step;
};

/// Maximal runs of at least three strictly decreasing pressures (nullopt
/// counts as infinite).
std::vector<ApproachEpisode> approach_episodes(const std::vector<std::optional<std::size_t>>& series);

/// Throws PressureUnavailable when a run marking is missing from the graph.
DriftReport drift_report(const Net& net, const RunRecord& run, const Predicate& pred, std::string name,
                         const ReachGraph& graph);
/// Explores with the default bound; throws UnknownPredicate for an unknown
/// forbidden predicate name.
DriftReport drift_report(const Net& net, const RunRecord& run, const std::string& forbidden_name);

}  // namespace respetri
