#include <doctest.h>

#include <algorithm>
#include <bit>
#include <set>

#include "generators.hpp"
#include "respetri/analysis.hpp"
#include "respetri/dsl.hpp"
#include "respetri/models.hpp"

using namespace respetri;

namespace {

using Cycle = std::vector<std::string>;
using PlaceSet = std::vector<std::string>;

const Cycle erosion_loop{"p2", "t2", "p3", "t4", "p4", "t6"};

bool contains(const std::vector<Cycle>& cycles, const Cycle& c) {
  return std::find(cycles.begin(), cycles.end(), c) != cycles.end();
}

bool arc_exists(const NetModel& m, const std::string& from, const std::string& to) {
  for (const auto& t : m.transitions) {
    auto touches = [](const std::vector<Arc>& arcs, const std::string& p) {
      return std::any_of(arcs.begin(), arcs.end(), [&](const Arc& a) { return a.place == p; });
    };
    if (t.id == to && (touches(t.inputs, from) || touches(t.reads, from))) return true;
    if (t.id == from && (touches(t.outputs, to) || touches(t.reads, to))) return true;
  }
  return false;
}

// Place sets of size <= max_size satisfying the siphon (pre of S within
// post of S) or trap (post of S within pre of S) condition; minimal ones only.
std::set<PlaceSet> brute_force(const NetModel& m, std::size_t max_size, bool siphon) {
  std::vector<std::string> ids;
  for (const auto& p : m.places) ids.push_back(p.id);
  std::sort(ids.begin(), ids.end());
  auto holds = [&](const std::set<std::string>& s) {
    for (const auto& t : m.transitions) {
      bool feeds = false, drains = false;
      for (const auto& a : t.outputs) feeds |= s.contains(a.place);
      for (const auto& a : t.inputs) drains |= s.contains(a.place);
      for (const auto& a : t.reads) {
        feeds |= s.contains(a.place);
        drains |= s.contains(a.place);
      }
      if (siphon && feeds && !drains) return false;
      if (!siphon && drains && !feeds) return false;
    }
    return true;
  };
  std::vector<std::set<std::string>> found;
  for (std::uint32_t mask = 1; mask < (1u << ids.size()); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) > max_size) continue;
    std::set<std::string> s;
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (mask & (1u << i)) s.insert(ids[i]);
    if (holds(s)) found.push_back(s);
  }
  std::set<PlaceSet> minimal;
  for (const auto& s : found) {
    const bool has_smaller = std::any_of(found.begin(), found.end(), [&](const std::set<std::string>& o) {
      return o.size() < s.size() && std::includes(s.begin(), s.end(), o.begin(), o.end());
    });
    if (!has_smaller) minimal.insert(PlaceSet(s.begin(), s.end()));
  }
  return minimal;
}

}  // namespace

TEST_CASE("acyclic chain has no cycles") {
  const auto r = parse_model({"place p0 init 1\nplace p1\nplace p2\ntrans t1 in p0 out p1\ntrans t2 in p1 out p2\n"});
  REQUIRE(r.ok());
  CHECK(find_cycles(*r.model).empty());
}

TEST_CASE("erosion loop appears in both use-case nets") {
  const auto traffic = find_cycles(build_traffic_model());
  const auto risk = find_cycles(build_risk_scoring_model());
  CHECK(contains(traffic, erosion_loop));
  CHECK(contains(risk, erosion_loop));
  CHECK(contains(find_cycles(build_traffic_model({.safeguards_enabled = true})), erosion_loop));
}

TEST_CASE("reported cycles are elementary and closed") {
  for (const auto& name : fixture_names()) {
    const NetModel m = build_fixture(name);
    const auto cycles = find_cycles(m);
    CHECK(std::set<Cycle>(cycles.begin(), cycles.end()).size() == cycles.size());
    for (const auto& c : cycles) {
      REQUIRE(c.size() % 2 == 0);
      CHECK(std::set<std::string>(c.begin(), c.end()).size() == c.size());
      CHECK(*std::min_element(c.begin(), c.end()) == c.front());
      for (std::size_t i = 0; i < c.size(); ++i) CHECK(arc_exists(m, c[i], c[(i + 1) % c.size()]));
    }
  }
}

TEST_CASE("cycle length cap") {
  const auto all = find_cycles(build_traffic_model());
  const auto short_only = find_cycles(build_traffic_model(), 4);
  for (const auto& c : short_only) CHECK(c.size() <= 4);
  CHECK(short_only.size() < all.size());
}

TEST_CASE("isolated source and sink places") {
  const auto r = parse_model({"place src init 1\nplace sink\ntrans t in src out sink\n"});
  REQUIRE(r.ok());
  const SiphonsAndTraps st = siphons_and_traps(*r.model, 2);
  CHECK(std::find(st.siphons.begin(), st.siphons.end(), PlaceSet{"src"}) != st.siphons.end());
  CHECK(std::find(st.traps.begin(), st.traps.end(), PlaceSet{"sink"}) != st.traps.end());
}

TEST_CASE("siphons and traps match an exhaustive subset test") {
  for (const auto& name : fixture_names()) {
    const NetModel m = build_fixture(name);
    if (m.places.size() > 12) continue;
    const SiphonsAndTraps st = siphons_and_traps(m, 4);
    CHECK(std::set<PlaceSet>(st.siphons.begin(), st.siphons.end()) == brute_force(m, 4, true));
    CHECK(std::set<PlaceSet>(st.traps.begin(), st.traps.end()) == brute_force(m, 4, false));
  }
  gen::Rng rng(12);
  for (int i = 0; i < 200; ++i) {
    const NetModel m = gen::random_net(rng, gen::NetOptions{});
    const SiphonsAndTraps st = siphons_and_traps(m, 3);
    CHECK(std::set<PlaceSet>(st.siphons.begin(), st.siphons.end()) == brute_force(m, 3, true));
    CHECK(std::set<PlaceSet>(st.traps.begin(), st.traps.end()) == brute_force(m, 3, false));
  }
}
