#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "respetri/governance.hpp"
#include "respetri/net.hpp"

namespace respetri {

/// Knobs for the bundled fixtures. Missing thresholds take the documented
/// defaults; `initial_tokens` overrides individual places.
struct FixtureConfig {
  std::map<std::string, std::int64_t> thresholds;
  std::map<std::string, Tokens> initial_tokens;
  bool safeguards_enabled = false;
  // SRS net only: model the permit as a read arc instead of a consuming input.
  bool permit_read_arc = false;
};

/// Default thresholds of each fixture.
///   traffic:      q=3 r=3 e=1 data_cap=3 (d unset: no p6 conjunct)
///   risk_scoring: a=1 b=2 c=1 d=2
///   srs_symbolic: theta=2
std::map<std::string, std::int64_t> default_thresholds(const std::string& fixture);

/// Adaptive traffic control: places p1..p6, transitions t1..t6, forbidden
/// predicate `emergency_starvation`.
NetModel build_traffic_model(const FixtureConfig& cfg = {});

/// Inhibitor p3 -> t4 at threshold r plus guard `p4 >= e + 2` on t4.
Patch traffic_safeguard_patch(const FixtureConfig& cfg = {});

/// Public-sector risk scoring: places p1..p6, transitions t1..t6, forbidden
/// predicate `deference_lock_in`.
NetModel build_risk_scoring_model(const FixtureConfig& cfg = {});

/// Guard `p4 >= c + 2` on t4.
Patch risk_scoring_safeguard_patch(const FixtureConfig& cfg = {});

/// Layered symbolic net with counted t2, guard on t2, counter audit rule and
/// forbidden predicate `bad_reached`.
NetModel build_srs_symbolic_model(const FixtureConfig& cfg = {});

/// Permit gate: guard `p_permit >= 1` on t_escalate.
Patch srs_safeguard_patch(const FixtureConfig& cfg = {});

/// Names accepted by build_fixture: each base fixture, optionally suffixed
/// with `_safeguarded`.
std::vector<std::string> fixture_names();

/// Throws Error for an unknown name.
NetModel build_fixture(const std::string& name, FixtureConfig cfg = {});

}  // namespace respetri
