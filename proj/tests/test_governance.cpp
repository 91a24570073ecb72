#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "respetri/dsl.hpp"
#include "respetri/governance.hpp"
#include "respetri/models.hpp"

using namespace respetri;

namespace {

Patch parse(const std::string& text) { return parse_patch({text, "<patch>"}); }

const std::string empty_sha256 = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855";

std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "respetri_governance_tests";
  std::filesystem::create_directories(dir);
  auto p = dir / name;
  std::filesystem::remove(p);
  return p;
}

}  // namespace

TEST_CASE("patch text round-trips") {
  const std::string text =
      "author \"ops\"\n"
      "rationale \"tighten\"\n"
      "add place guard_p init 1 cap 2 label \"guard place\"\n"
      "add trans tg in guard_p out p1 counted label \"g\" guard p1 >= 1\n"
      "add arc t4 inhibit p3:3\n"
      "remove arc t1 read p1\n"
      "set guard t4 := p4 >= 3\n"
      "clear guard t6\n"
      "set cap p1 9\n"
      "clear cap p2\n"
      "add forbidden flooded := p1 >= 9\n"
      "remove forbidden flooded\n"
      "set label p1 \"queue\"\n";
  const Patch p = parse(text);
  CHECK(p.author == "ops");
  CHECK(p.rationale == "tighten");
  CHECK(p.ops.size() == 11);
  const Patch again = parse(serialize_patch(p));
  CHECK(serialize_patch(again) == serialize_patch(p));
  CHECK(again.id() == p.id());
  CHECK(p.id().size() == 64);
}

TEST_CASE("patch syntax errors") {
  try {
    parse("add arc t4 sideways p3\n");
    FAIL("expected PatchSyntaxError");
  } catch (const PatchSyntaxError& e) {
    REQUIRE_FALSE(e.errors().empty());
    CHECK(e.errors()[0].position.line == 1);
  }
  CHECK_THROWS_AS(parse("author \"x\"\nfrobnicate t4\n"), PatchSyntaxError);
}

TEST_CASE("patch identity is the hash of its operations") {
  CHECK(Patch{}.id() == empty_sha256);
  Patch a = parse("author \"a\"\nset guard t4 := p4 >= 3\n");
  Patch b = parse("author \"b\"\nrationale \"other\"\nset guard t4 := p4 >= 3\n");
  CHECK(a.id() == b.id());
}

TEST_CASE("safeguard inhibitor blocks erosion at r") {
  const NetModel base = build_traffic_model();
  const NetModel guarded = apply_patch(base, parse("add arc t4 inhibit p3:3\n"));
  const Net net(guarded);
  const Marking m = make_marking(net, {{"p3", 3}, {"p4", 3}});
  CHECK_FALSE(is_enabled(net, m, "t4"));
  CHECK(is_enabled(net, make_marking(net, {{"p3", 2}, {"p4", 3}}), "t4"));
}

TEST_CASE("apply errors are atomic") {
  const NetModel base = build_traffic_model();
  CHECK_THROWS_AS(apply_patch(base, parse("remove place p3\n")), DanglingReference);
  CHECK_THROWS_AS(apply_patch(base, parse("set guard t9 := p1 >= 1\n")), UnknownTarget);
  CHECK_THROWS_AS(apply_patch(base, parse("add place p1\n")), ResultingModelInvalid);
  CHECK_THROWS_AS(apply_patch(base, parse("add forbidden emergency_starvation := p1 >= 1\n")),
                  ResultingModelInvalid);
  CHECK_THROWS_AS(apply_patch(base, parse("set label t4 \"x\"\nremove place p3\n")), DanglingReference);
  CHECK(base == build_traffic_model());
}

TEST_CASE("empty patch keeps the model") {
  const NetModel base = build_traffic_model();
  const NetModel same = apply_patch(base, Patch{});
  CHECK(structurally_equal(same, base));
  CHECK(model_hash(same) == model_hash(base));
}

TEST_CASE("guard and capacity edits") {
  const NetModel base = build_traffic_model();
  const NetModel a = apply_patch(base, parse("set guard t4 := p4 >= 3\nset cap p1 5\n"));
  CHECK(a.find_transition("t4")->guard == parse_predicate("p4 >= 3"));
  CHECK(a.find_place("p1")->capacity == Tokens{5});
  const NetModel b = apply_patch(a, parse("clear guard t4\nclear cap p1\n"));
  CHECK_FALSE(b.find_transition("t4")->guard.has_value());
  CHECK_FALSE(b.find_place("p1")->capacity.has_value());
}

TEST_CASE("mode switch moves the mode token") {
  auto r = parse_model({"place p init 1\ntrans t in p\nmode normal initial\nmode safe disable t\n"});
  REQUIRE(r.ok());
  const NetModel m = apply_patch(*r.model, parse("switch mode safe\n"));
  CHECK(m.find_place("mode_normal")->initial == 0);
  CHECK(m.find_place("mode_safe")->initial == 1);
  CHECK_THROWS_AS(apply_patch(*r.model, parse("switch mode absent\n")), UnknownTarget);
}

TEST_CASE("safeguard verification flips the traffic verdict") {
  const NetModel base = build_traffic_model();
  const Patch p = parse_patch_file(std::string(RESPETRI_SOURCE_DIR) + "/models/traffic_safeguard.patch");
  const VerificationReport r = verify_patch(base, p);
  REQUIRE(r.predicates.size() == 1);
  const auto& c = r.predicates[0];
  CHECK(c.name == "emergency_starvation");
  REQUIRE(c.before);
  REQUIRE(c.after);
  CHECK(c.before->unsafe());
  CHECK(c.after->safe());
  CHECK(c.after->safe_proof() == SafeProof::ExhaustiveBounded);
  CHECK_FALSE(r.any_regression());
  CHECK_FALSE(r.safe_to_unsafe());
  CHECK(r.patch_id == p.id());
  CHECK(apply_patch(base, p) == build_traffic_model({.safeguards_enabled = true}));
}

TEST_CASE("label-only patches keep verdicts") {
  const NetModel base = build_risk_scoring_model();
  const VerificationReport r = verify_patch(base, parse("set label t2 \"Human accepts the score\"\n"));
  for (const auto& c : r.predicates) {
    REQUIRE(c.before);
    REQUIRE(c.after);
    CHECK(*c.before == *c.after);
  }
  CHECK_FALSE(r.forbidden_set_changed());
  CHECK(r.states_before == r.states_after);
}

TEST_CASE("dropping a forbidden predicate is visible") {
  const NetModel base = build_traffic_model({.safeguards_enabled = true});
  const VerificationReport r = verify_patch(base, parse("remove forbidden emergency_starvation\n"));
  CHECK(r.forbidden_set_changed());
  REQUIRE(r.predicates.size() == 1);
  CHECK(r.predicates[0].removed());
}

TEST_CASE("reverting a safeguard is a regression") {
  const NetModel base = build_traffic_model({.safeguards_enabled = true});
  const VerificationReport r = verify_patch(base, parse("remove arc t4 inhibit p3\nclear guard t4\n"));
  CHECK(r.any_regression());
  CHECK(r.safe_to_unsafe());
}

TEST_CASE("governance log chain") {
  const NetModel genesis = build_traffic_model();
  const Patch p1 = parse("author \"a\"\nadd arc t4 inhibit p3:3\n");
  const Patch p2 = parse("author \"b\"\nset guard t4 := p4 >= 3\n");
  const NetModel m1 = apply_patch(genesis, p1);
  const NetModel m2 = apply_patch(m1, p2);

  GovernanceLog log = record_decision({}, genesis, m1, p1, verify_patch(genesis, p1), "2026-01-01T00:00:00Z");
  CHECK(log.size() == 1);
  CHECK(log.entries()[0].pre_hash == model_hash(genesis));
  CHECK(log.entries()[0].post_hash == model_hash(m1));
  CHECK(log.entries()[0].verdicts.at("emergency_starvation") == "Unsafe -> Unsafe");
  log = record_decision(log, m1, m2, p2, verify_patch(m1, p2), "2026-01-02T00:00:00Z");
  CHECK(log.size() == 2);
  CHECK_FALSE(log.first_break().has_value());

  CHECK_THROWS_AS(record_decision(log, genesis, m1, p1, verify_patch(genesis, p1)), HashChainBroken);
  CHECK_THROWS_AS(record_decision(log, m2, m2, p1, verify_patch(m2, p2)), Error);

  LogEntry bogus = log.entries().back();
  bogus.pre_hash = model_hash(genesis);
  GovernanceLog copy = log;
  CHECK_THROWS_AS(copy.append(bogus), HashChainBroken);
  CHECK(copy.size() == 2);

  CHECK(model_hash(replay(genesis, log)) == model_hash(m2));
  CHECK_THROWS_AS(replay(m1, log), HashChainBroken);

  const GovernanceLog parsed = GovernanceLog::from_jsonl(log.to_jsonl());
  CHECK(parsed.entries() == log.entries());
}

TEST_CASE("tampered logs fail replay") {
  const NetModel genesis = build_traffic_model();
  const Patch p1 = parse("add arc t4 inhibit p3:3\n");
  GovernanceLog log = record_decision({}, genesis, apply_patch(genesis, p1), p1, verify_patch(genesis, p1));
  std::string text = log.to_jsonl();
  const auto at = text.find("p3:3");
  REQUIRE(at != std::string::npos);
  text.replace(at, 4, "p3:2");
  CHECK_THROWS_AS(replay(genesis, GovernanceLog::from_jsonl(text)), HashChainBroken);
}

TEST_CASE("log persistence appends") {
  const auto path = temp_path("log.jsonl");
  const NetModel genesis = build_traffic_model();
  const Patch p1 = parse("add arc t4 inhibit p3:3\n");
  const Patch p2 = parse("set guard t4 := p4 >= 3\n");
  const NetModel m1 = apply_patch(genesis, p1);
  const NetModel m2 = apply_patch(m1, p2);

  CHECK(GovernanceLog::load(path).empty());
  GovernanceLog log = record_decision({}, genesis, m1, p1, verify_patch(genesis, p1));
  log.save(path);
  log = record_decision(GovernanceLog::load(path), m1, m2, p2, verify_patch(m1, p2));
  log.save(path);
  const GovernanceLog back = GovernanceLog::load(path);
  CHECK(back.size() == 2);
  CHECK(back.entries() == log.entries());

  GovernanceLog stale = record_decision({}, m1, m2, p2, verify_patch(m1, p2));
  CHECK_THROWS_AS(stale.save(path), HashChainBroken);
  CHECK(GovernanceLog::load(path).size() == 2);
}

TEST_CASE("timestamps are UTC") {
  const std::string ts = utc_timestamp();
  CHECK(ts.size() == 20);
  CHECK(ts.back() == 'Z');
  CHECK(ts[10] == 'T');
}
