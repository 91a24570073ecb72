#include <doctest.h>

#include <algorithm>

#include "generators.hpp"
#include "respetri/dsl.hpp"
#include "respetri/models.hpp"
#include "respetri/net.hpp"

using namespace respetri;

namespace {

NetModel parse(const std::string& text) {
  auto r = parse_model({text});
  REQUIRE(r.ok());
  return *r.model;
}

bool has_error(const std::vector<StructureError>& errors, StructureError::Rule rule, const std::string& subject) {
  return std::any_of(errors.begin(), errors.end(),
                     [&](const StructureError& e) { return e.rule == rule && e.subject == subject; });
}

}  // namespace

TEST_CASE("validation reports structural errors") {
  NetModel dup;
  dup.places = {{"p1", 0, std::nullopt, ""}, {"p1", 1, std::nullopt, ""}};
  const auto e1 = validate_net(dup);
  REQUIRE(e1.size() == 1);
  CHECK(e1[0].rule == StructureError::Rule::DuplicateId);
  CHECK(e1[0].subject == "p1");

  NetModel dangling;
  dangling.places = {{"p", 0, std::nullopt, ""}};
  TransitionDef t;
  t.id = "t";
  t.inputs = {{"px", 1}};
  dangling.transitions = {t};
  const auto e2 = validate_net(dangling);
  REQUIRE(e2.size() == 1);
  CHECK(e2[0].rule == StructureError::Rule::UnknownEndpoint);
  CHECK(e2[0].subject == "px");

  CHECK(validate_net(build_traffic_model()).empty());
  CHECK_THROWS_AS(Net{dup}, ModelInvalid);
}

TEST_CASE("validation rejects weights, capacities and references") {
  NetModel m = parse("place p init 1 cap 2\ntrans t in p");
  m.transitions[0].inputs[0].weight = 0;
  CHECK(has_error(validate_net(m), StructureError::Rule::InvalidWeight, "t:p"));

  NetModel c = parse("place p init 1 cap 2");
  c.places[0].initial = 3;
  CHECK(has_error(validate_net(c), StructureError::Rule::InitialExceedsCapacity, "p"));

  NetModel g = parse("place p\ntrans t in p");
  g.transitions[0].guard = Predicate::tokens("nowhere", Cmp::Ge, 1);
  CHECK_FALSE(validate_net(g).empty());
}

TEST_CASE("enabling of a single input") {
  const Net net(parse("place p init 1\nplace q\ntrans t in p out q"));
  const Marking m1 = net.initial_marking();
  CHECK(is_enabled(net, m1, "t"));
  const Marking m0 = make_marking(net, {{"p", 0}});
  CHECK_FALSE(is_enabled(net, m0, "t"));

  const Marking after = fire(net, m1, "t");
  CHECK(tokens_at(net, after, "p") == 0);
  CHECK(tokens_at(net, after, "q") == 1);
  CHECK_THROWS_AS(fire(net, m0, "t"), NotEnabled);
  CHECK_THROWS_AS(fire(net, m1, "nope"), UnknownTransition);
}

TEST_CASE("enabled sets") {
  const Net empty(parse("place p init 2"));
  CHECK(enabled_set(empty, empty.initial_marking()).empty());

  const Net chain(parse("place p0 init 1\nplace p1\nplace p2\ntrans t1 in p0 out p1\ntrans t2 in p1 out p2"));
  CHECK(enabled_set(chain, chain.initial_marking()) == std::vector<TransitionIndex>{0});
}

TEST_CASE("symbolic layered net at its initial marking") {
  const Net net(build_srs_symbolic_model());
  const Marking m0 = net.initial_marking();
  CHECK_FALSE(is_enabled(net, m0, "t2"));
  std::vector<std::string> ids;
  for (auto t : enabled_set(net, m0)) ids.push_back(net.transition_id(t));
  CHECK(ids == std::vector<std::string>{"t_A", "t_Pol"});

  const Marking m = make_marking(net, {{"pB", 1}, {"p_permit", 1}});
  const Marking next = fire(net, m, "t2");
  CHECK(tokens_at(net, next, "pB") == 0);
  CHECK(tokens_at(net, next, "p_permit") == 0);
  CHECK(tokens_at(net, next, "pC") == 1);
  CHECK(counter_of(net, next, "t2") == 1);
}

TEST_CASE("guard evaluation") {
  const Net net(build_srs_symbolic_model());
  CHECK(eval_guard(net, parse_predicate("pA >= 1"), net.initial_marking()));
  CHECK(eval_guard(net, parse_predicate("#t2 > 2"), make_marking(net, {}, {{"t2", 3}})));
  CHECK_FALSE(eval_guard(net, parse_predicate("#t2 > 2"), make_marking(net, {}, {{"t2", 2}})));
  CHECK(eval_guard(net, parse_predicate("not pB >= 1"), net.initial_marking()));
  CHECK_THROWS_AS(eval_guard(net, parse_predicate("zz >= 1"), net.initial_marking()), UnknownReference);
}

TEST_CASE("inhibitor, read and capacity semantics") {
  const Net net(parse("place a init 2\nplace b init 2 cap 2\nplace c\n"
                      "trans t1 inhibit a:3 out c\ntrans t2 read b in a out b\ntrans t3 in a out c"));
  const Marking m0 = net.initial_marking();
  CHECK(is_enabled(net, m0, "t1"));
  CHECK_FALSE(is_enabled(net, make_marking(net, {{"a", 3}}), "t1"));
  // t2 reads b and would push b above its capacity.
  CHECK_FALSE(is_enabled(net, m0, "t2"));
  CHECK(is_enabled(net, make_marking(net, {{"a", 1}, {"b", 1}}), "t2"));
  CHECK_FALSE(is_enabled(net, make_marking(net, {{"a", 1}}), "t2"));
  CHECK(is_enabled(net, m0, "t3"));
}

TEST_CASE("self loops compile to read arcs") {
  const NetModel m = parse("place p init 1\nplace q\ntrans t in p out p out q");
  const TransitionDef& t = m.transitions[0];
  CHECK(t.inputs.empty());
  CHECK(t.reads == std::vector<Arc>{{"p", 1}});
  CHECK(t.outputs == std::vector<Arc>{{"q", 1}});
}

TEST_CASE("firing laws on random nets") {
  gen::Rng rng(11);
  for (int n = 0; n < 300; ++n) {
    const NetModel model = gen::random_net(rng, gen::NetOptions{});
    const Net net(model);
    for (int k = 0; k < 10; ++k) {
      std::map<std::string, Tokens> tokens;
      for (const auto& p : model.places) {
        Tokens v = static_cast<Tokens>(rng.between(0, 4));
        if (p.capacity) v = std::min(v, *p.capacity);
        tokens[p.id] = v;
      }
      std::map<std::string, Tokens> counters;
      for (const auto& t : model.transitions)
        if (t.counted) counters[t.id] = static_cast<Tokens>(rng.between(0, 3));
      const Marking m = make_marking(net, tokens, counters);
      for (TransitionIndex t = 0; t < net.transition_count(); ++t) {
        const bool enabled = is_enabled(net, m, t);
        if (!enabled) {
          CHECK_THROWS_AS(fire(net, m, t), NotEnabled);
          continue;
        }
        const Marking next = fire(net, m, t);
        const TransitionDef& def = model.transitions[t];
        for (PlaceIndex p = 0; p < net.place_count(); ++p) {
          const std::string& id = net.place_id(p);
          const auto touches = [&](const std::vector<Arc>& arcs) {
            return std::any_of(arcs.begin(), arcs.end(), [&](const Arc& a) { return a.place == id; });
          };
          if (!touches(def.inputs) && !touches(def.outputs)) CHECK(next.tokens[p] == m.tokens[p]);
          if (auto cap = net.capacity(p); cap && next.tokens[p] > m.tokens[p]) CHECK(next.tokens[p] <= *cap);
        }
        for (std::size_t s = 0; s < net.counter_count(); ++s) {
          const Tokens expected = m.counters[s] + (net.counter_transition(s) == t ? 1 : 0);
          CHECK(next.counters[s] == expected);
        }
      }
    }
  }
}

TEST_CASE("structural equality ignores declaration order") {
  const NetModel a = parse("place p init 1\nplace q\ntrans t in p out q\ntrans u in q out p");
  const NetModel b = parse("place q\nplace p init 1\ntrans u in q out p\ntrans t in p out q");
  CHECK(structurally_equal(a, b));
  CHECK(format_marking(Net(a), Net(a).initial_marking()) == "{p:1}");
}
