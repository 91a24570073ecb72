// Acceptance harness: one PASS/FAIL line per criterion, all checks exact.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <deque>
#include <functional>
#include <map>
#include <set>
#include <string>

#include "generators.hpp"
#include "harness.hpp"
#include "oracle.hpp"
#include "respetri/analysis.hpp"
#include "respetri/audit.hpp"
#include "respetri/dsl.hpp"
#include "respetri/governance.hpp"
#include "respetri/models.hpp"
#include "respetri/report.hpp"

using namespace respetri;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

std::vector<std::string> counted_ids(const NetModel& m) {
  std::vector<std::string> out;
  for (const auto& t : m.transitions)
    if (t.counted) out.push_back(t.id);
  return out;
}

// 1. explore and check_predicate against the brute-force enumerator.
Outcome oracle_equivalence() {
  Outcome o;
  gen::Rng rng(1001);
  std::size_t states = 0;
  std::map<std::string, std::size_t> kinds;
  for (int i = 0; i < 500; ++i) {
    const NetModel model = gen::random_net(rng, gen::NetOptions{});
    const Net net(model);
    const ReachGraph g = explore(net, harness::token_bound(6));
    const oracle::Enumeration e = oracle::enumerate(model, 6);
    if (!harness::same_graph(net, g, e)) o.fail("graph mismatch on net " + std::to_string(i));
    states += g.nodes.size();
    for (int k = 0; k < 3; ++k) {
      const Predicate p = gen::random_predicate(rng, gen::place_ids(model), 2, false, counted_ids(model));
      const Verdict v = check_predicate(net, g, p, "p");
      if (std::string(to_string(v.kind)) != oracle::expected_verdict(model, e, p))
        o.fail("verdict mismatch on net " + std::to_string(i) + " for " + to_string(p));
      if (v.trace() != nullptr && !harness::replays(net, *v.trace(), net.compile(p)))
        o.fail("trace does not replay on net " + std::to_string(i));
      ++kinds[describe(v)];
    }
  }
  if (o.pass) {
    o.detail = "500 nets, " + std::to_string(states) + " markings; verdicts";
    for (const auto& [k, n] : kinds) o.detail += " " + k + "=" + std::to_string(n);
  }
  return o;
}

// 2. Traffic fixture with and without safeguards.
Outcome traffic_invariant() {
  Outcome o;
  const Net bare(build_traffic_model());
  const Verdict v = check_forbidden(bare, "emergency_starvation");
  if (!v.unsafe() || v.trace() == nullptr) {
    o.fail("unsafeguarded verdict is " + describe(v));
    return o;
  }
  const Predicate templ = parse_predicate("p1 >= 3 and p3 >= 3 and p4 <= 1");
  if (!harness::replays(bare, *v.trace(), bare.compile(templ))) o.fail("trace does not replay into the template");

  const Net guarded(build_traffic_model({.safeguards_enabled = true}));
  const Verdict s = check_forbidden(guarded, "emergency_starvation");
  if (describe(s) != "Safe/ExhaustiveBounded") o.fail("safeguarded verdict is " + describe(s));
  if (o.pass)
    o.detail = "Unsafe in " + std::to_string(v.trace()->firings.size()) + " firings; safeguarded " + describe(s) +
               " over " + std::to_string(s.states_explored) + " markings";
  return o;
}

// 3. Karp-Miller against exhaustive exploration on bounded nets.
Outcome coverability_agreement() {
  Outcome o;
  gen::Rng rng(3003);
  int nets = 0, attempts = 0;
  while (nets < 200 && attempts < 20000) {
    ++attempts;
    const NetModel model = gen::random_net(rng, gen::monotone_options(4));
    const Net net(model);
    ExplorationBound small;
    small.max_states = 20'000;
    const ReachGraph g = explore(net, small);
    if (g.truncated) continue;
    ++nets;
    const Predicate target = gen::random_predicate(rng, gen::place_ids(model), 2, true);
    const Verdict exhaustive = check_predicate(net, g, target, "target");
    const CoverabilityResult km = karp_miller(net, target, "target");
    if (km.verdict.kind != exhaustive.kind)
      o.fail("disagreement on " + to_string(target) + ": " + describe(km.verdict) + " vs " + describe(exhaustive));
  }
  if (nets < 200) o.fail("only " + std::to_string(nets) + " bounded nets generated");

  auto src = parse_model({"place p\ntrans t out p\n"});
  const CoverabilityResult r = karp_miller(Net(*src.model), parse_predicate("p >= 5"), "five");
  const bool has_omega = std::any_of(r.tree.nodes.begin(), r.tree.nodes.end(),
                                     [](const CoverNode& n) { return n.tokens[0] == omega; });
  if (!r.verdict.unsafe() || !has_omega) o.fail("source net: " + describe(r.verdict));
  if (o.pass) o.detail = "200 bounded nets agree; source net Unsafe via omega";
  return o;
}

// 4. Structural checks on both use-case nets.
Outcome structure_checks() {
  Outcome o;
  const std::vector<std::string> loop{"p2", "t2", "p3", "t4", "p4", "t6"};
  for (const std::string name : {"traffic", "risk_scoring"}) {
    const NetModel m = build_fixture(name);
    const auto cycles = find_cycles(m);
    if (std::find(cycles.begin(), cycles.end(), loop) == cycles.end()) o.fail(name + " lacks the erosion loop");
    if (m.places.size() != 6 || m.transitions.size() != 6)
      o.fail(name + " has " + std::to_string(m.places.size()) + "/" + std::to_string(m.transitions.size()));
  }
  if (o.pass) o.detail = "loop (p2, t2, p3, t4, p4, t6) found in both nets; 6/6 each";
  return o;
}

// 5. Counter alarm on the layered net and pressure along shortest traces.
Outcome auditing() {
  Outcome o;
  FixtureConfig cfg;
  cfg.thresholds = {{"theta", 2}};
  cfg.initial_tokens = {{"pA", 3}, {"p_permit", 3}};
  const Net net(build_srs_symbolic_model(cfg));
  const RunRecord run = simulate(net, Scripted{{"t_A", "t2", "t_A", "t2", "t_A", "t2"}}, 6);
  std::optional<std::size_t> first;
  for (const auto& a : run.alarms)
    if (a.rule == "theta_alarm") {
      first = a.step;
      break;
    }
  std::size_t t2_count = 0, third_t2 = 0;
  for (std::size_t i = 0; i < run.firings.size(); ++i)
    if (run.firings[i] == "t2" && ++t2_count == 3) third_t2 = i + 1;
  if (!first || *first != third_t2) o.fail("first alarm not at the third t2 firing");

  // Every shortest violation trace in the explored graph.
  std::size_t traces = 0;
  for (const auto& name : fixture_names()) {
    const Net fnet(build_fixture(name));
    const ReachGraph g = explore(fnet);
    const auto pred = fnet.forbidden(fnet.model().forbidden.begin()->first);
    const PressureMap pm = pressure_map(g, pred);
    const auto shortest = pm.distance[0];
    if (!shortest) continue;
    std::vector<std::vector<NodeId>> succ(g.nodes.size());
    for (const auto& e : g.edges) succ[e.from].push_back(e.to);
    std::vector<NodeId> path{0};
    std::function<void()> walk = [&] {
      const NodeId n = path.back();
      if (path.size() == *shortest + 1) {
        if (!pred(g.nodes[n])) return;
        ++traces;
        for (std::size_t i = 0; i < path.size(); ++i) {
          const auto d = reachability_pressure(g, g.nodes[path[i]], pred).distance;
          if (d != *shortest - i) o.fail(name + ": pressure does not drop by one");
        }
        return;
      }
      for (NodeId m : succ[n]) {
        if (g.depth[m] != path.size() || !pm.distance[m] || *pm.distance[m] + path.size() != *shortest) continue;
        path.push_back(m);
        walk();
        path.pop_back();
      }
    };
    walk();
  }
  if (traces == 0) o.fail("no shortest violation traces found");
  if (o.pass)
    o.detail = "alarm at step " + std::to_string(*first) + " (third t2); " + std::to_string(traces) +
               " shortest traces checked";
  return o;
}

// 6. Nodes within depth d are contained in nodes within depth d + 1.
Outcome monotone_prefixes() {
  Outcome o;
  std::vector<NetModel> models;
  for (const auto& name : fixture_names()) models.push_back(build_fixture(name));
  gen::Rng rng(6006);
  for (int i = 0; i < 100; ++i) models.push_back(gen::random_net(rng, gen::NetOptions{}));
  std::size_t graphs = 0;
  for (const auto& m : models) {
    const Net net(m);
    const ExplorationBound full = harness::token_bound(6);
    const ReachGraph whole = explore(net, full);
    const std::size_t deepest = whole.depth.back();
    for (NodeId n = 1; n < whole.nodes.size(); ++n)
      if (whole.depth[n] < whole.depth[n - 1]) o.fail("depths not ordered");
    std::set<Marking> previous;
    for (std::size_t d = 0; d <= deepest + 1; ++d) {
      ExplorationBound b = full;
      b.max_depth = d;
      const ReachGraph g = explore(net, b);
      std::set<Marking> now(g.nodes.begin(), g.nodes.end());
      if (!std::includes(now.begin(), now.end(), previous.begin(), previous.end()))
        o.fail("prefix at depth " + std::to_string(d) + " loses markings");
      std::set<Marking> within;
      for (NodeId n = 0; n < whole.nodes.size(); ++n)
        if (whole.depth[n] <= d) within.insert(whole.nodes[n]);
      if (within != now) o.fail("depth-bounded exploration differs from the prefix");
      previous = std::move(now);
      ++graphs;
    }
  }
  if (o.pass) o.detail = std::to_string(models.size()) + " nets, " + std::to_string(graphs) + " depth prefixes";
  return o;
}

// 7. Round trip, seeded simulation and multi-worker exploration.
Outcome round_trip_and_determinism() {
  Outcome o;
  std::vector<NetModel> models;
  for (const auto& name : fixture_names()) models.push_back(build_fixture(name));
  gen::Rng rng(7007);
  for (int i = 0; i < 500; ++i) models.push_back(gen::random_model(rng));
  for (const auto& m : models) {
    const ModelSource text = serialize_model(m);
    const auto back = parse_model(text);
    if (!back.ok() || !structurally_equal(*back.model, m) || serialize_model(*back.model).text != text.text)
      o.fail("round trip failed:\n" + text.text);
  }

  for (const auto& name : fixture_names()) {
    const NetModel m = build_fixture(name);
    const Net net(m);
    auto report = [&] {
      const RunRecord run = simulate(net, UniformRandom{99}, 300);
      Json r = make_report("simulate", model_hash(m), Json{{"seed", 99}}, Json{{"run", run_json(net, run)}}, 0.0);
      return dump_report(r) + run_jsonl(net, run);
    };
    if (report() != report()) o.fail(name + ": simulation reports differ");

    const ReachGraph one = explore(net, {}, 1);
    for (unsigned w : {2u, 8u}) {
      const ReachGraph many = explore(net, {}, w);
      if (many.nodes != one.nodes || many.edges != one.edges || many.depth != one.depth ||
          many.parent != one.parent || many.parent_transition != one.parent_transition ||
          many.truncated != one.truncated)
        o.fail(name + ": exploration with " + std::to_string(w) + " workers differs");
    }
  }
  if (o.pass) o.detail = std::to_string(models.size()) + " models round-trip; runs and worker counts identical";
  return o;
}

// 8. Replay of a governance log and the safeguard verdict flip.
Outcome governance_chain() {
  Outcome o;
  const NetModel genesis = build_traffic_model();
  std::vector<Patch> patches{
      parse_patch({"author \"a\"\nrationale \"inhibit erosion\"\nadd arc t4 inhibit p3:3\n"}),
      parse_patch({"author \"b\"\nrationale \"keep reserve\"\nset guard t4 := p4 >= 3\n"}),
      parse_patch({"author \"c\"\nset label p1 \"Queue length\"\nadd place audit_p\n"}),
  };
  GovernanceLog log;
  NetModel current = genesis;
  for (const auto& p : patches) {
    const NetModel next = apply_patch(current, p);
    log = record_decision(log, current, next, p, verify_patch(current, p));
    current = next;
  }
  const GovernanceLog reloaded = GovernanceLog::from_jsonl(log.to_jsonl());
  if (model_hash(replay(genesis, reloaded)) != model_hash(current)) o.fail("replay hash differs");

  const Patch safeguard = traffic_safeguard_patch();
  const VerificationReport r = verify_patch(genesis, safeguard);
  const auto& c = r.predicates.at(0);
  if (!c.before || !c.after || !c.before->unsafe() || !c.after->safe())
    o.fail("safeguard patch did not flip Unsafe to Safe");
  if (o.pass) o.detail = "3 logged patches replay to " + model_hash(current).substr(0, 12) + "; Unsafe -> Safe";
  return o;
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"semantics oracle equivalence", oracle_equivalence},
      {"traffic forbidden invariant", traffic_invariant},
      {"coverability agreement", coverability_agreement},
      {"structure checks", structure_checks},
      {"auditing", auditing},
      {"monotone prefix law", monotone_prefixes},
      {"round trip and determinism", round_trip_and_determinism},
      {"governance chain", governance_chain},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out.fail(std::string("exception: ") + e.what());
    }
    if (!out.pass) ++failures;
    std::printf("criterion %zu %s: %s (%s)\n", i + 1, criteria[i].first.c_str(), out.pass ? "PASS" : "FAIL",
                out.detail.c_str());
    std::fflush(stdout);
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%d/%zu criteria passed in %.1f s\n", static_cast<int>(criteria.size()) - failures, criteria.size(),
              seconds);
  return failures == 0 ? 0 : 1;
}
