#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "respetri/analysis.hpp"
#include "respetri/audit.hpp"
#include "respetri/dsl.hpp"
#include "respetri/governance.hpp"
#include "respetri/models.hpp"
#include "respetri/report.hpp"

namespace fs = std::filesystem;
using namespace respetri;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_unsafe = 1;
constexpr int exit_unknown = 2;
constexpr int exit_usage = 3;
constexpr int exit_script = 4;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LoadedModel {
  NetModel model;
  std::optional<fs::path> path;  // absent for builtin fixtures
  std::string name;
};

LoadedModel load_model(const std::string& arg) {
  constexpr std::string_view builtin = "builtin:";
  if (arg.starts_with(builtin)) {
    const std::string name = arg.substr(builtin.size());
    try {
      return {build_fixture(name), std::nullopt, name};
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  const ParseResult r = parse_model_file(arg);
  if (!r.ok()) {
    std::ostringstream msg;
    const ModelSource src{"", arg};
    for (const auto& e : r.parse_errors) msg << format_error(src, e) << "\n";
    for (const auto& e : r.structure_errors)
      msg << arg << ": " << to_string(e.rule) << " '" << e.subject << "': " << e.message << "\n";
    std::string text = msg.str();
    if (!text.empty()) text.pop_back();
    throw UsageError(text);
  }
  return {*r.model, fs::path(arg), fs::path(arg).stem().string()};
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write " + path.string());
  out << text;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

struct BoundFlags {
  std::size_t states = ExplorationBound{}.max_states;
  std::size_t depth = ExplorationBound{}.max_depth;
  Tokens tokens = ExplorationBound{}.max_tokens_per_place;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--bound-states", states, "Maximum explored markings")->check(CLI::PositiveNumber);
    cmd->add_option("--bound-depth", depth, "Maximum firing depth")->check(CLI::PositiveNumber);
    cmd->add_option("--bound-tokens", tokens, "Token cut for uncapacitated places")->check(CLI::PositiveNumber);
  }
  ExplorationBound bound() const { return {states, depth, tokens}; }
  Json json() const { return {{"max_states", states}, {"max_depth", depth}, {"max_tokens_per_place", tokens}}; }
};

// ---- check -------------------------------------------------------------------

struct CheckOptions {
  std::string model;
  std::string predicate;
  BoundFlags bound;
  std::string analysis;
  std::string report;
  unsigned workers = 1;
  std::size_t cycle_length = 12;
  std::size_t siphon_size = 4;
};

int run_check(const CheckOptions& o) {
  const auto start = std::chrono::steady_clock::now();
  const LoadedModel loaded = load_model(o.model);
  const Net net(loaded.model);
  std::vector<std::string> names;
  if (!o.predicate.empty()) {
    if (!loaded.model.forbidden.contains(o.predicate))
      throw UsageError("model has no forbidden predicate '" + o.predicate + "'");
    names.push_back(o.predicate);
  } else {
    for (const auto& [name, _] : loaded.model.forbidden) names.push_back(name);
  }
  const auto analyses = split_list(o.analysis);
  for (const auto& a : analyses)
    if (a != "cycles" && a != "siphons" && a != "pressure") throw UsageError("unknown analysis '" + a + "'");

  const ReachGraph graph = explore(net, o.bound.bound(), o.workers);
  Json verdicts = Json::array();
  bool any_unsafe = false, any_unknown = false;
  for (const auto& name : names) {
    const Verdict v = check_predicate(net, graph, loaded.model.forbidden.at(name), name);
    any_unsafe = any_unsafe || v.unsafe();
    any_unknown = any_unknown || v.kind == VerdictKind::Unknown;
    std::cout << name << ": " << describe(v);
    if (const ViolationTrace* t = v.trace()) {
      std::cout << " after " << t->firings.size() << " firing(s):";
      for (const auto& f : t->firings) std::cout << ' ' << f;
      std::cout << "\n  final marking " << format_marking(net, t->markings.back());
    }
    std::cout << "\n";
    verdicts.push_back(verdict_json(net, v));
  }
  std::cout << "explored " << graph.nodes.size() << " markings, " << graph.edges.size() << " edges"
            << (graph.truncated ? " (truncated)" : "") << "\n";

  Json results = {{"verdicts", std::move(verdicts)},
                  {"states", graph.nodes.size()},
                  {"edges", graph.edges.size()},
                  {"truncated", graph.truncated}};
  for (const auto& a : analyses) {
    if (a == "cycles") {
      const auto cycles = find_cycles(loaded.model, o.cycle_length);
      std::cout << "cycles: " << cycles.size() << "\n";
      for (const auto& c : cycles) {
        std::cout << " ";
        for (const auto& n : c) std::cout << ' ' << n;
        std::cout << "\n";
      }
      results["cycles"] = cycles_json(cycles);
    } else if (a == "siphons") {
      const auto st = siphons_and_traps(loaded.model, o.siphon_size);
      std::cout << "minimal siphons: " << st.siphons.size() << ", minimal traps: " << st.traps.size() << "\n";
      results["siphons_traps"] = siphons_json(st);
    } else {
      Json pressure = Json::object();
      for (const auto& name : names) {
        const auto p = reachability_pressure(graph, graph.root(), net.forbidden(name));
        pressure[name] = p.distance ? Json(*p.distance) : Json(nullptr);
        std::cout << "pressure " << name << ": " << (p.distance ? std::to_string(*p.distance) : "unreachable")
                  << (p.graph_truncated ? " within bound" : "") << "\n";
      }
      results["pressure"] = std::move(pressure);
    }
  }

  if (!o.report.empty()) {
    const Json params = {{"model", o.model},
                         {"predicate", o.predicate.empty() ? Json(nullptr) : Json(o.predicate)},
                         {"bound", o.bound.json()},
                         {"analysis", analyses},
                         {"workers", o.workers}};
    write_file(o.report, dump_report(make_report("check", model_hash(loaded.model), params, std::move(results),
                                                 seconds_since(start))));
  }
  if (any_unsafe) return exit_unsafe;
  if (any_unknown) return exit_unknown;
  return exit_ok;
}

// ---- simulate ----------------------------------------------------------------

struct SimulateOptions {
  std::string model;
  std::size_t steps = 100;
  std::uint64_t seed = 0;
  std::string policy = "random";
  std::string pressure;
  std::string report;
  std::string trace;
};

SimPolicy parse_policy(const std::string& text, std::uint64_t seed) {
  if (text == "random") return UniformRandom{seed};
  if (text.starts_with("priority:")) return Priority{split_list(text.substr(9)), seed};
  if (text.starts_with("script:")) return Scripted{split_list(text.substr(7))};
  throw UsageError("unknown policy '" + text + "' (expected random, priority:t1,t2 or script:t1,t2)");
}

int run_simulate(const SimulateOptions& o) {
  const auto start = std::chrono::steady_clock::now();
  const LoadedModel loaded = load_model(o.model);
  const Net net(loaded.model);
  const SimPolicy policy = parse_policy(o.policy, o.seed);
  RunRecord run;
  try {
    run = simulate(net, policy, o.steps);
  } catch (const UnknownTransition& e) {
    throw UsageError(e.what());
  }

  std::cout << "steps: " << run.steps();
  if (run.deadlock_step) std::cout << " (deadlock at step " << *run.deadlock_step << ")";
  std::cout << "\nfinal marking " << format_marking(net, run.markings.back()) << "\n";
  for (const auto& a : run.alarms)
    std::cout << "alarm " << a.rule << " at step " << a.step << " (observed " << a.observed << ")\n";

  Json results = {{"run", run_json(net, run)}};
  if (!o.pressure.empty()) {
    if (!loaded.model.forbidden.contains(o.pressure))
      throw UsageError("model has no forbidden predicate '" + o.pressure + "'");
    const DriftReport drift = drift_report(net, run, o.pressure);
    std::cout << "pressure " << o.pressure << ":";
    for (const auto& d : drift.series) std::cout << ' ' << (d ? std::to_string(*d) : "inf");
    std::cout << "\napproach episodes: " << drift.episodes.size() << "\n";
    results["drift"] = drift_json(drift);
  }
  if (!o.trace.empty()) write_file(o.trace, run_jsonl(net, run));
  if (!o.report.empty()) {
    const Json params = {{"model", o.model},
                         {"steps", o.steps},
                         {"seed", o.seed},
                         {"policy", o.policy},
                         {"pressure", o.pressure.empty() ? Json(nullptr) : Json(o.pressure)}};
    write_file(o.report, dump_report(make_report("simulate", model_hash(loaded.model), params, std::move(results),
                                                 seconds_since(start))));
  }
  return exit_ok;
}

// ---- edit --------------------------------------------------------------------

struct EditOptions {
  std::string model;
  std::string patch;
  bool verify = false;
  BoundFlags bound;
  std::string report;
  std::string output;
  unsigned workers = 1;
};

int run_edit(const EditOptions& o) {
  const auto start = std::chrono::steady_clock::now();
  const LoadedModel loaded = load_model(o.model);
  Patch patch;
  try {
    patch = parse_patch_file(o.patch);
  } catch (const PatchSyntaxError& e) {
    std::string msg;
    for (const auto& err : e.errors()) msg += format_error({"", o.patch}, err) + "\n";
    if (!msg.empty()) msg.pop_back();
    throw UsageError(msg);
  }

  NetModel patched;
  try {
    patched = apply_patch(loaded.model, patch);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }

  VerificationReport report;
  report.patch_id = patch.id();
  report.bound = o.bound.bound();
  if (o.verify) report = verify_patch(loaded.model, patch, o.bound.bound(), o.workers);

  const fs::path dir = loaded.path ? loaded.path->parent_path() : fs::current_path();
  const fs::path out = o.output.empty() ? dir / (loaded.name + ".patched.net") : fs::path(o.output);
  const char* env_log = std::getenv("RESPETRI_LOG");
  const fs::path log_path = env_log != nullptr && *env_log != '\0' ? fs::path(env_log) : dir / "governance.log.jsonl";

  GovernanceLog log = GovernanceLog::load(log_path);
  log = record_decision(std::move(log), loaded.model, patched, patch, report);
  write_file(out, serialize_model(patched).text);
  log.save(log_path);

  std::cout << "patch " << patch.id().substr(0, 12) << " applied: " << patch.ops.size() << " op(s)\n";
  std::cout << "wrote " << out.string() << "\nlogged to " << log_path.string() << "\n";
  if (o.verify) {
    const Net pre(loaded.model), post(patched);
    for (const auto& c : report.predicates) {
      std::cout << c.name << ": " << (c.before ? describe(*c.before) : "absent") << " -> "
                << (c.after ? describe(*c.after) : "absent") << (c.regression ? "  REGRESSION" : "") << "\n";
    }
    if (report.forbidden_set_changed()) std::cout << "warning: the set of forbidden predicates changed\n";
    if (!o.report.empty()) {
      const Json params = {{"model", o.model}, {"patch", o.patch}, {"verify", true}, {"bound", o.bound.json()}};
      const Json results = {{"verification", verification_json(pre, post, report)},
                            {"post_hash", model_hash(patched)},
                            {"output", out.string()}};
      write_file(o.report, dump_report(make_report("edit", model_hash(loaded.model), params, results,
                                                   seconds_since(start))));
    }
  } else if (!o.report.empty()) {
    const Json params = {{"model", o.model}, {"patch", o.patch}, {"verify", false}};
    const Json results = {{"patch_id", patch.id()}, {"post_hash", model_hash(patched)}, {"output", out.string()}};
    write_file(o.report,
               dump_report(make_report("edit", model_hash(loaded.model), params, results, seconds_since(start))));
  }
  return o.verify && report.safe_to_unsafe() ? exit_unsafe : exit_ok;
}

// ---- fixture -----------------------------------------------------------------

int run_fixture(const std::string& name, bool safeguards, const std::vector<std::string>& thresholds) {
  FixtureConfig cfg;
  cfg.safeguards_enabled = safeguards;
  for (const auto& kv : thresholds) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("threshold must be name=value: " + kv);
    try {
      cfg.thresholds[kv.substr(0, eq)] = std::stoll(kv.substr(eq + 1));
    } catch (const std::exception&) {
      throw UsageError("threshold must be name=value: " + kv);
    }
  }
  try {
    std::cout << serialize_model(build_fixture(name, cfg)).text;
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Petri-net reachability checking, simulation and governed editing"};
  app.set_version_flag("--version", RESPETRI_VERSION);
  app.require_subcommand(1);

  CheckOptions check;
  auto* check_cmd = app.add_subcommand("check", "Check forbidden predicates");
  check_cmd->add_option("model", check.model, "Model file or builtin:<fixture>")->required();
  check_cmd->add_option("--predicate", check.predicate, "Only check this forbidden predicate");
  check.bound.add_to(check_cmd);
  check_cmd->add_option("--analysis", check.analysis, "Comma list of cycles, siphons, pressure");
  check_cmd->add_option("--report", check.report, "Write a JSON report");
  check_cmd->add_option("--workers", check.workers, "Exploration threads")->check(CLI::PositiveNumber);
  check_cmd->add_option("--cycle-length", check.cycle_length, "Longest cycle to list")->check(CLI::PositiveNumber);
  check_cmd->add_option("--siphon-size", check.siphon_size, "Largest siphon/trap to list")
      ->check(CLI::PositiveNumber);

  SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Run the token game with auditing");
  sim_cmd->add_option("model", sim.model, "Model file or builtin:<fixture>")->required();
  sim_cmd->add_option("--steps", sim.steps, "Maximum number of firings");
  sim_cmd->add_option("--seed", sim.seed, "Random seed");
  sim_cmd->add_option("--policy", sim.policy, "random, priority:t1,t2 or script:t1,t2");
  sim_cmd->add_option("--pressure", sim.pressure, "Forbidden predicate for the drift report");
  sim_cmd->add_option("--report", sim.report, "Write a JSON report");
  sim_cmd->add_option("--trace", sim.trace, "Write the per-step JSONL run record");

  EditOptions edit;
  auto* edit_cmd = app.add_subcommand("edit", "Apply a governance patch");
  edit_cmd->add_option("model", edit.model, "Model file or builtin:<fixture>")->required();
  edit_cmd->add_option("patch", edit.patch, "Patch file")->required();
  edit_cmd->add_flag("--verify", edit.verify, "Compare verdicts before and after");
  edit.bound.add_to(edit_cmd);
  edit_cmd->add_option("--report", edit.report, "Write a JSON report");
  edit_cmd->add_option("--output", edit.output, "Patched model path (default <stem>.patched.net)");
  edit_cmd->add_option("--workers", edit.workers, "Exploration threads")->check(CLI::PositiveNumber);

  std::string fixture_name;
  bool fixture_safeguards = false;
  std::vector<std::string> fixture_thresholds;
  auto* fixture_cmd = app.add_subcommand("fixture", "Print a bundled model");
  fixture_cmd->add_option("name", fixture_name, "Fixture name")->required();
  fixture_cmd->add_flag("--safeguards", fixture_safeguards, "Include the safeguards");
  fixture_cmd->add_option("--threshold", fixture_thresholds, "Override a threshold (name=value)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_usage;
  }

  try {
    if (*check_cmd) return run_check(check);
    if (*sim_cmd) return run_simulate(sim);
    if (*edit_cmd) return run_edit(edit);
    if (*fixture_cmd) return run_fixture(fixture_name, fixture_safeguards, fixture_thresholds);
  } catch (const ScriptedFiringDisabled& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_script;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_usage;
  }
  return exit_usage;
}
