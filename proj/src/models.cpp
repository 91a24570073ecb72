#include "respetri/models.hpp"

#include <algorithm>

namespace respetri {

namespace {

using Thresholds = std::map<std::string, std::int64_t>;

Thresholds resolve(const std::string& fixture, const FixtureConfig& cfg) {
  Thresholds t = default_thresholds(fixture);
  for (const auto& [k, v] : cfg.thresholds) {
    if (v < 0) throw Error("threshold '" + k + "' must be nonnegative");
    t[k] = v;
  }
  return t;
}

Tokens as_tokens(std::int64_t v) { return static_cast<Tokens>(v); }

TransitionDef trans(std::string id, std::string label, std::vector<Arc> in, std::vector<Arc> out,
                    std::vector<Arc> read = {}) {
  TransitionDef t;
  t.id = std::move(id);
  t.label = std::move(label);
  t.inputs = std::move(in);
  t.outputs = std::move(out);
  t.reads = std::move(read);
  return t;
}

void apply_initial(NetModel& m, const FixtureConfig& cfg) {
  for (const auto& [place, tokens] : cfg.initial_tokens) {
    PlaceDef* p = m.find_place(place);
    if (p == nullptr) throw Error("fixture has no place '" + place + "'");
    p->initial = tokens;
  }
}

void document(NetModel& m, const std::string& fixture, const Thresholds& t) {
  m.metadata["fixture"] = fixture;
  for (const auto& [k, v] : t) m.metadata["threshold_" + k] = std::to_string(v);
}

NetModel finish(NetModel m, const FixtureConfig& cfg, const Patch& safeguards) {
  apply_initial(m, cfg);
  if (cfg.safeguards_enabled) return apply_patch(m, safeguards);
  if (auto errors = validate_net(m); !errors.empty()) throw ModelInvalid(std::move(errors));
  return m;
}

}  // namespace

std::map<std::string, std::int64_t> default_thresholds(const std::string& fixture) {
  if (fixture == "traffic") return {{"q", 3}, {"r", 3}, {"e", 1}, {"data_cap", 3}};
  if (fixture == "risk_scoring") return {{"a", 1}, {"b", 2}, {"c", 1}, {"d", 2}};
  if (fixture == "srs_symbolic") return {{"theta", 2}};
  throw Error("unknown fixture '" + fixture + "'");
}

// ---- traffic ---------------------------------------------------------------

Patch traffic_safeguard_patch(const FixtureConfig& cfg) {
  const Thresholds t = resolve("traffic", cfg);
  Patch p;
  p.author = "fixture";
  p.rationale = "block oversight reduction once reliance reaches r and keep emergency capacity above e";
  p.ops.push_back(AddArc{"t4", ArcRole::Inhibitor, {"p3", as_tokens(t.at("r"))}});
  p.ops.push_back(SetGuard{"t4", Predicate::tokens("p4", Cmp::Ge, t.at("e") + 2)});
  return p;
}

NetModel build_traffic_model(const FixtureConfig& cfg) {
  const Thresholds t = resolve("traffic", cfg);
  NetModel m;
  m.places = {
      {"p1", 3, std::nullopt, "Intersection queue capacity"},
      {"p2", 1, Tokens{2}, "Active signal timing policy"},
      {"p3", 0, Tokens{4}, "Institutional reliance on adaptive control"},
      {"p4", 3, std::nullopt, "Emergency vehicle priority capacity"},
      {"p5", 0, Tokens{2}, "Driver route adaptation"},
      {"p6", 0, as_tokens(std::max<std::int64_t>(1, t.at("data_cap"))), "Endogenous congestion data"},
  };
  m.transitions = {
      trans("t1", "Sense traffic state and update controller inputs", {{"p5", 1}}, {{"p2", 1}}, {{"p1", 1}}),
      trans("t2", "Apply adaptive signal timing or routing decision", {{"p2", 1}}, {{"p3", 1}, {"p6", 1}}),
      trans("t3", "Codify learned policy into default control parameters", {}, {{"p2", 1}}, {{"p3", 1}}),
      // Oversight erosion: needs two units of capacity and gives one back.
      trans("t4", "Reduce manual oversight due to perceived controller reliability", {{"p4", 2}}, {{"p4", 1}},
            {{"p3", 1}}),
      trans("t5", "Driver population adapts routes and departure times", {{"p2", 1}}, {{"p5", 1}}),
      trans("t6", "Retrain or retune control policy on endogenous traffic data", {{"p6", 1}}, {{"p2", 1}},
            {{"p3", 1}, {"p4", 1}}),
  };
  std::vector<Predicate> parts{Predicate::tokens("p1", Cmp::Ge, t.at("q")), Predicate::tokens("p3", Cmp::Ge, t.at("r")),
                               Predicate::tokens("p4", Cmp::Le, t.at("e"))};
  if (t.contains("d")) parts.push_back(Predicate::tokens("p6", Cmp::Ge, t.at("d")));
  m.forbidden.emplace("emergency_starvation", Predicate::all(std::move(parts)));
  document(m, "traffic", t);
  return finish(std::move(m), cfg, traffic_safeguard_patch(cfg));
}

// ---- risk scoring ------------------------------------------------------------

Patch risk_scoring_safeguard_patch(const FixtureConfig& cfg) {
  const Thresholds t = resolve("risk_scoring", cfg);
  Patch p;
  p.author = "fixture";
  p.rationale = "oversight may only be reduced while review capacity stays above c";
  p.ops.push_back(SetGuard{"t4", Predicate::tokens("p4", Cmp::Ge, t.at("c") + 2)});
  return p;
}

NetModel build_risk_scoring_model(const FixtureConfig& cfg) {
  const Thresholds t = resolve("risk_scoring", cfg);
  NetModel m;
  m.places = {
      {"p1", 3, Tokens{3}, "Human discretionary capacity available"},
      {"p2", 0, Tokens{2}, "Algorithmic recommendation invoked"},
      {"p3", 0, Tokens{4}, "Institutional reliance on automated scores"},
      {"p4", 3, std::nullopt, "Oversight and review capacity"},
      {"p5", 0, Tokens{2}, "Population behavioral adaptation"},
      {"p6", 0, Tokens{4}, "Endogenous data accumulation"},
  };
  m.transitions = {
      trans("t1", "Generate and present risk score", {}, {{"p2", 1}}),
      trans("t2", "Human defers to recommendation", {{"p1", 1}, {"p2", 1}}, {{"p3", 1}, {"p6", 1}}),
      trans("t3", "Procedure updated to codify usage", {}, {{"p1", 1}}, {{"p3", 1}}),
      trans("t4", "Oversight reduced due to perceived reliability", {{"p4", 2}}, {{"p4", 1}}, {{"p3", 1}}),
      trans("t5", "Population adapts behavior to scoring regime", {}, {{"p5", 1}}, {{"p3", 1}}),
      trans("t6", "Model retrained on endogenous data", {{"p6", 1}}, {{"p2", 1}}, {{"p4", 1}}),
  };
  m.forbidden.emplace("deference_lock_in",
                      Predicate::all({Predicate::tokens("p1", Cmp::Le, t.at("a")),
                                      Predicate::tokens("p3", Cmp::Ge, t.at("b")),
                                      Predicate::tokens("p4", Cmp::Le, t.at("c")),
                                      Predicate::tokens("p6", Cmp::Ge, t.at("d"))}));
  document(m, "risk_scoring", t);
  return finish(std::move(m), cfg, risk_scoring_safeguard_patch(cfg));
}

// ---- symbolic layered net --------------------------------------------------

Patch srs_safeguard_patch(const FixtureConfig&) {
  Patch p;
  p.author = "fixture";
  p.rationale = "escalation requires a live permit";
  p.ops.push_back(SetGuard{"t_escalate", Predicate::tokens("p_permit", Cmp::Ge, 1)});
  return p;
}

NetModel build_srs_symbolic_model(const FixtureConfig& cfg) {
  const Thresholds t = resolve("srs_symbolic", cfg);
  NetModel m;
  m.places = {
      {"pA", 1, std::nullopt, "Generation layer input"},
      {"p_policy", 1, std::nullopt, "Policy layer"},
      {"pB", 0, std::nullopt, "Candidate action"},
      {"p_dash", 0, Tokens{1}, "Dashboard signal"},
      {"p_permit", 1, std::nullopt, "Permit"},
      {"pC", 0, std::nullopt, "Committed action"},
      {"pD", 0, std::nullopt, "Deployed effect"},
      {"p_bad", 0, std::nullopt, "Forbidden outcome"},
      {"p_flag", 0, Tokens{1}, "Audit flag"},
  };
  TransitionDef t2 = trans("t2", "Gated execution", {{"pB", 1}}, {{"pC", 1}});
  (cfg.permit_read_arc ? t2.reads : t2.inputs).push_back({"p_permit", 1});
  t2.counted = true;
  t2.guard = Predicate::tokens("p_flag", Cmp::Le, 0);
  TransitionDef audit = trans("t_audit", "Raise audit flag", {}, {{"p_flag", 1}});
  audit.inhibitors = {{"p_flag", 1}};
  audit.guard = Predicate::counter("t2", Cmp::Gt, t.at("theta"));
  m.transitions = {
      trans("t_A", "Generate", {{"pA", 1}}, {{"pB", 1}}),
      trans("t_Pol", "Apply policy", {{"p_policy", 1}}, {{"pB", 1}}),
      trans("t_dash", "Publish dashboard", {}, {{"p_dash", 1}}, {{"pB", 1}}),
      std::move(t2),
      std::move(audit),
      trans("tCD1", "Deploy", {{"pC", 1}}, {{"pD", 1}}),
      trans("tCD2", "Feed back", {{"pD", 1}}, {{"pC", 1}}),
      trans("t_escalate", "Escalate", {{"pC", 1}}, {{"p_bad", 1}}),
  };
  m.forbidden.emplace("bad_reached", Predicate::tokens("p_bad", Cmp::Ge, 1));
  m.audit_rules.emplace("theta_alarm", AuditRule{"theta_alarm", CounterThreshold{"t2", t.at("theta")}});
  document(m, "srs_symbolic", t);
  m.metadata["permit"] = cfg.permit_read_arc ? "read" : "consuming";
  return finish(std::move(m), cfg, srs_safeguard_patch(cfg));
}

// ---- registry --------------------------------------------------------------

std::vector<std::string> fixture_names() {
  return {"risk_scoring", "risk_scoring_safeguarded", "srs_symbolic", "srs_symbolic_safeguarded",
          "traffic",      "traffic_safeguarded"};
}

NetModel build_fixture(const std::string& name, FixtureConfig cfg) {
  std::string base = name;
  constexpr std::string_view suffix = "_safeguarded";
  if (base.size() > suffix.size() && base.ends_with(suffix)) {
    base.resize(base.size() - suffix.size());
    cfg.safeguards_enabled = true;
  }
  if (base == "traffic") return build_traffic_model(cfg);
  if (base == "risk_scoring") return build_risk_scoring_model(cfg);
  if (base == "srs_symbolic") return build_srs_symbolic_model(cfg);
  throw Error("unknown fixture '" + name + "'");
}

}  // namespace respetri
