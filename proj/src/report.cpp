#include "respetri/report.hpp"

namespace respetri {

Json marking_json(const Net& net, const Marking& m) {
  Json tokens = Json::object(), counters = Json::object();
  for (PlaceIndex p = 0; p < net.place_count(); ++p) tokens[net.place_id(p)] = m.tokens[p];
  for (std::size_t c = 0; c < net.counter_count(); ++c)
    counters[net.transition_id(net.counter_transition(c))] = m.counters[c];
  return {{"tokens", std::move(tokens)}, {"counters", std::move(counters)}};
}

Json verdict_json(const Net& net, const Verdict& v) {
  Json j = {{"predicate", v.checked_predicate},
            {"verdict", std::string(to_string(v.kind))},
            {"proof", nullptr},
            {"states", v.states_explored},
            {"truncated", v.truncated}};
  if (auto proof = v.safe_proof()) j["proof"] = std::string(to_string(*proof));
  if (v.kind == VerdictKind::Unknown) j["proof"] = "BoundExhausted";
  if (const ViolationTrace* trace = v.trace()) {
    j["proof"] = "ViolationTrace";
    Json markings = Json::array();
    for (const auto& m : trace->markings) markings.push_back(marking_json(net, m));
    j["trace"] = {{"firings", trace->firings}, {"markings", std::move(markings)}};
  }
  return j;
}

Json run_json(const Net& net, const RunRecord& run) {
  Json markings = Json::array();
  for (const auto& m : run.markings) markings.push_back(marking_json(net, m));
  Json alarms = Json::array();
  for (const auto& a : run.alarms) alarms.push_back({{"step", a.step}, {"rule", a.rule}, {"observed", a.observed}});
  Json j = {{"steps", run.steps()},
            {"firings", run.firings},
            {"markings", std::move(markings)},
            {"deadlock_step", nullptr},
            {"alarms", std::move(alarms)}};
  if (run.deadlock_step) j["deadlock_step"] = *run.deadlock_step;
  return j;
}

Json drift_json(const DriftReport& d) {
  Json series = Json::array();
  for (const auto& v : d.series) series.push_back(v ? Json(*v) : Json(nullptr));
  Json episodes = Json::array();
  for (const auto& e : d.episodes) episodes.push_back({{"first_step", e.first_step}, {"last_step", e.last_step}});
  Json j = {{"predicate", d.predicate},
            {"pressure_series", std::move(series)},
            {"approach_episodes", std::move(episodes)},
            {"graph_truncated", d.graph_truncated},
            {"first_violation_step", nullptr}};
  if (d.first_violation_step) j["first_violation_step"] = *d.first_violation_step;
  return j;
}

Json cycles_json(const std::vector<std::vector<std::string>>& cycles) { return Json(cycles); }

Json siphons_json(const SiphonsAndTraps& st) { return {{"siphons", st.siphons}, {"traps", st.traps}}; }

Json verification_json(const Net& pre, const Net& post, const VerificationReport& r) {
  Json predicates = Json::array();
  for (const auto& c : r.predicates) {
    predicates.push_back({{"name", c.name},
                          {"before", c.before ? verdict_json(pre, *c.before) : Json(nullptr)},
                          {"after", c.after ? verdict_json(post, *c.after) : Json(nullptr)},
                          {"added", c.added()},
                          {"removed", c.removed()},
                          {"regression", c.regression}});
  }
  return {{"patch_id", r.patch_id},
          {"states_before", r.states_before},
          {"states_after", r.states_after},
          {"truncated_before", r.truncated_before},
          {"truncated_after", r.truncated_after},
          {"forbidden_set_changed", r.forbidden_set_changed()},
          {"regression", r.any_regression()},
          {"predicates", std::move(predicates)}};
}

std::string run_jsonl(const Net& net, const RunRecord& run) {
  std::string out;
  std::size_t next_alarm = 0;
  for (std::size_t s = 0; s < run.markings.size(); ++s) {
    Json alarms = Json::array();
    while (next_alarm < run.alarms.size() && run.alarms[next_alarm].step == s)
      alarms.push_back(run.alarms[next_alarm++].rule);
    Json m = marking_json(net, run.markings[s]);
    Json line = {{"step", s},
                 {"fired", s == 0 ? Json(nullptr) : Json(run.firings[s - 1])},
                 {"tokens", std::move(m["tokens"])},
                 {"counters", std::move(m["counters"])},
                 {"alarms", std::move(alarms)}};
    out += line.dump() + "\n";
  }
  return out;
}

Json make_report(const std::string& command, const std::string& model_hash, Json parameters, Json results,
                 double wall_time_s) {
  return {{"tool", "respetri"},
          {"version", RESPETRI_VERSION},
          {"command", command},
          {"model_hash", model_hash},
          {"parameters", std::move(parameters)},
          {"results", std::move(results)},
          {"wall_time_s", wall_time_s}};
}

std::string dump_report(const Json& report) { return report.dump(2) + "\n"; }

}  // namespace respetri
