#pragma once

#include <string>

#include <json.hpp>

#include "respetri/analysis.hpp"
#include "respetri/audit.hpp"
#include "respetri/governance.hpp"
#include "respetri/net.hpp"

namespace respetri {

using Json = nlohmann::ordered_json;

/// Report schema (JSON, keys in the order below):
///
///   tool, version, command, model_hash, parameters, results, wall_time_s
///
/// Markings render as {"tokens": {place: n, ...}, "counters": {t: n, ...}}
/// with every place and counted transition present. Verdicts render as
/// {"predicate", "verdict", "proof", "states", "truncated", "trace"?}, where
/// a trace is {"firings": [...], "markings": [...]}.
Json marking_json(const Net& net, const Marking& m);
Json verdict_json(const Net& net, const Verdict& v);
Json run_json(const Net& net, const RunRecord& run);
Json drift_json(const DriftReport& d);
Json cycles_json(const std::vector<std::vector<std::string>>& cycles);
Json siphons_json(const SiphonsAndTraps& st);
Json verification_json(const Net& pre, const Net& post, const VerificationReport& r);

/// One JSON object per step:
///   {"step", "fired" (null at step 0), "tokens", "counters", "alarms": [rule ids]}
std::string run_jsonl(const Net& net, const RunRecord& run);

Json make_report(const std::string& command, const std::string& model_hash, Json parameters, Json results,
                 double wall_time_s);

/// Pretty-printed report text; identical inputs give identical bytes apart
/// from the wall_time_s value.
std::string dump_report(const Json& report);

}  // namespace respetri
