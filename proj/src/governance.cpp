#include "respetri/governance.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lexer.hpp"
#include "sha256.hpp"

namespace respetri {

using detail::LineParser;
using detail::Token;

// ---- text form -------------------------------------------------------------

namespace {

std::optional<ArcRole> role_keyword(std::string_view kw) {
  if (kw == "in") return ArcRole::Input;
  if (kw == "out") return ArcRole::Output;
  if (kw == "inhibit") return ArcRole::Inhibitor;
  if (kw == "read") return ArcRole::Read;
  return std::nullopt;
}

std::string op_line(const EditOp& op) {
  return std::visit(
      [](const auto& o) -> std::string {
        using O = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<O, AddPlace>) {
          return "add " + detail::place_line(o.place);
        } else if constexpr (std::is_same_v<O, RemovePlace>) {
          return "remove place " + o.id;
        } else if constexpr (std::is_same_v<O, AddTransition>) {
          return "add " + detail::transition_line(o.transition);
        } else if constexpr (std::is_same_v<O, RemoveTransition>) {
          return "remove trans " + o.id;
        } else if constexpr (std::is_same_v<O, AddArc>) {
          std::string s = "add arc " + o.transition + " " + std::string(to_string(o.role)) + " " + o.arc.place;
          if (o.arc.weight != 1) s += ":" + std::to_string(o.arc.weight);
          return s;
        } else if constexpr (std::is_same_v<O, RemoveArc>) {
          return "remove arc " + o.transition + " " + std::string(to_string(o.role)) + " " + o.place;
        } else if constexpr (std::is_same_v<O, SetGuard>) {
          return o.guard ? "set guard " + o.transition + " := " + to_string(*o.guard) : "clear guard " + o.transition;
        } else if constexpr (std::is_same_v<O, SetCapacity>) {
          return o.capacity ? "set cap " + o.place + " " + std::to_string(*o.capacity) : "clear cap " + o.place;
        } else if constexpr (std::is_same_v<O, AddForbidden>) {
          return "add forbidden " + o.name + " := " + to_string(o.predicate);
        } else if constexpr (std::is_same_v<O, RemoveForbidden>) {
          return "remove forbidden " + o.name;
        } else if constexpr (std::is_same_v<O, SetLabel>) {
          return "set label " + o.id + " " + quote(o.label);
        } else {
          return "switch mode " + o.mode;
        }
      },
      op);
}

class PatchParser {
 public:
  Patch parse(std::string_view text) {
    std::size_t line_no = 0, start = 0;
    while (start <= text.size()) {
      std::size_t end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      ++line_no;
      line(text.substr(start, end - start), line_no);
      start = end + 1;
    }
    if (!errors_.empty()) throw PatchSyntaxError(std::move(errors_));
    return std::move(patch_);
  }

 private:
  void line(std::string_view raw, std::size_t line_no) {
    auto tokens = detail::tokenize_line(raw, line_no, errors_);
    LineParser p(tokens, errors_);
    if (p.at_end()) return;
    const Token head = p.peek();
    p.next();
    if (head.kind == Token::Kind::Ident) {
      if (head.text == "author" || head.text == "rationale") {
        auto s = p.expect_string(head.text);
        if (!s || !p.expect_end()) return;
        (head.text == "author" ? patch_.author : patch_.rationale) = std::move(*s);
        return;
      }
      if (head.text == "add") return add(p, raw, line_no, head);
      if (head.text == "remove") return remove(p);
      if (head.text == "set") return set(p);
      if (head.text == "clear") return clear(p);
      if (head.text == "switch") {
        if (!p.expect_keyword("mode")) return;
        auto m = p.expect_ident("mode identifier");
        if (m && p.expect_end()) patch_.ops.push_back(SwitchMode{*m});
        return;
      }
    }
    p.error(head, "expected a patch operation, found " + detail::describe(head),
            {"author", "rationale", "add", "remove", "set", "clear", "switch"});
  }

  // `add place` and `add trans` reuse the model declaration grammar on the
  // same line with the leading keyword blanked, so columns stay accurate.
  void add(LineParser& p, std::string_view raw, std::size_t line_no, const Token& head) {
    if (p.at_keyword("place") || p.at_keyword("trans")) {
      std::string text(line_no - 1, '\n');
      std::string blanked(raw);
      const std::size_t col = head.position.column - 1;
      blanked.replace(col, head.text.size(), std::string(head.text.size(), ' '));
      text += blanked;
      std::vector<ParseError> errors;
      ModelDraft draft = detail::parse_draft(text, errors);
      if (!errors.empty()) {
        errors_.insert(errors_.end(), errors.begin(), errors.end());
        return;
      }
      if (!draft.net.places.empty()) patch_.ops.push_back(AddPlace{std::move(draft.net.places.front())});
      else patch_.ops.push_back(AddTransition{std::move(draft.net.transitions.front())});
      return;
    }
    if (p.at_keyword("arc")) {
      p.next();
      auto t = p.expect_ident("transition identifier");
      if (!t) return;
      auto role = arc_role(p);
      if (!role) return;
      auto place = p.expect_ident("place identifier");
      if (!place) return;
      Tokens weight = 1;
      if (p.at_op(":")) {
        p.next();
        auto w = p.expect_nonnegative("arc weight");
        if (!w) return;
        weight = static_cast<Tokens>(*w);
      }
      if (p.expect_end()) patch_.ops.push_back(AddArc{*t, *role, {*place, weight}});
      return;
    }
    if (p.at_keyword("forbidden")) {
      p.next();
      auto name = p.expect_ident("predicate name");
      if (!name || !p.expect_op(":=")) return;
      auto pred = p.predicate();
      if (pred) patch_.ops.push_back(AddForbidden{*name, std::move(*pred)});
      return;
    }
    p.error(p.peek(), "expected what to add, found " + detail::describe(p.peek()),
            {"place", "trans", "arc", "forbidden"});
  }

  void remove(LineParser& p) {
    const Token what = p.peek();
    if (p.at_keyword("arc")) {
      p.next();
      auto t = p.expect_ident("transition identifier");
      if (!t) return;
      auto role = arc_role(p);
      if (!role) return;
      auto place = p.expect_ident("place identifier");
      if (place && p.expect_end()) patch_.ops.push_back(RemoveArc{*t, *role, *place});
      return;
    }
    if (p.at_keyword("place") || p.at_keyword("trans") || p.at_keyword("forbidden")) {
      p.next();
      auto id = p.expect_ident("identifier");
      if (!id || !p.expect_end()) return;
      if (what.text == "place") patch_.ops.push_back(RemovePlace{*id});
      else if (what.text == "trans") patch_.ops.push_back(RemoveTransition{*id});
      else patch_.ops.push_back(RemoveForbidden{*id});
      return;
    }
    p.error(what, "expected what to remove, found " + detail::describe(what),
            {"place", "trans", "arc", "forbidden"});
  }

  void set(LineParser& p) {
    if (p.at_keyword("guard")) {
      p.next();
      auto t = p.expect_ident("transition identifier");
      if (!t || !p.expect_op(":=")) return;
      auto pred = p.predicate();
      if (pred) patch_.ops.push_back(SetGuard{*t, std::move(*pred)});
      return;
    }
    if (p.at_keyword("cap")) {
      p.next();
      auto place = p.expect_ident("place identifier");
      if (!place) return;
      auto n = p.expect_nonnegative("capacity");
      if (n && p.expect_end()) patch_.ops.push_back(SetCapacity{*place, static_cast<Tokens>(*n)});
      return;
    }
    if (p.at_keyword("label")) {
      p.next();
      auto id = p.expect_ident("identifier");
      if (!id) return;
      auto s = p.expect_string("label");
      if (s && p.expect_end()) patch_.ops.push_back(SetLabel{*id, std::move(*s)});
      return;
    }
    p.error(p.peek(), "expected what to set, found " + detail::describe(p.peek()), {"guard", "cap", "label"});
  }

  void clear(LineParser& p) {
    const bool guard = p.at_keyword("guard");
    if (!guard && !p.at_keyword("cap")) {
      p.error(p.peek(), "expected what to clear, found " + detail::describe(p.peek()), {"guard", "cap"});
      return;
    }
    p.next();
    auto id = p.expect_ident("identifier");
    if (!id || !p.expect_end()) return;
    if (guard) patch_.ops.push_back(SetGuard{*id, std::nullopt});
    else patch_.ops.push_back(SetCapacity{*id, std::nullopt});
  }

  std::optional<ArcRole> arc_role(LineParser& p) {
    const Token& t = p.peek();
    if (t.kind == Token::Kind::Ident)
      if (auto role = role_keyword(t.text)) {
        p.next();
        return role;
      }
    p.error(t, "expected arc role, found " + detail::describe(t), {"in", "out", "read", "inhibit"});
    return std::nullopt;
  }

  std::vector<ParseError> errors_;
  Patch patch_;
};

std::string join_errors(const std::vector<ParseError>& errors) {
  std::string out = "patch syntax error";
  for (const auto& e : errors)
    out += "\n  " + std::to_string(e.position.line) + ":" + std::to_string(e.position.column) + ": " + e.message;
  return out;
}

std::string join_errors(const std::vector<StructureError>& errors) {
  std::string out = "patched model is invalid";
  for (const auto& e : errors) out += "\n  " + std::string(to_string(e.rule)) + " " + e.subject + ": " + e.message;
  return out;
}

}  // namespace

PatchSyntaxError::PatchSyntaxError(std::vector<ParseError> errors)
    : Error(join_errors(errors)), errors_(std::move(errors)) {}

ResultingModelInvalid::ResultingModelInvalid(std::vector<StructureError> errors)
    : Error(join_errors(errors)), errors_(std::move(errors)) {}

std::string ops_text(const Patch& patch) {
  std::string out;
  for (const auto& op : patch.ops) out += op_line(op) + "\n";
  return out;
}

std::string serialize_patch(const Patch& patch) {
  std::string out;
  if (!patch.author.empty()) out += "author " + quote(patch.author) + "\n";
  if (!patch.rationale.empty()) out += "rationale " + quote(patch.rationale) + "\n";
  return out + ops_text(patch);
}

std::string Patch::id() const { return detail::sha256_hex(ops_text(*this)); }

Patch parse_patch(const ModelSource& src) { return PatchParser().parse(src.text); }

Patch parse_patch_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PatchSyntaxError({{{1, 1}, "cannot read " + path.string(), {}}});
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_patch({ss.str(), path.string()});
}

// ---- application -----------------------------------------------------------

namespace {

bool predicate_mentions(const Predicate& p, Predicate::Kind kind, std::string_view id) {
  bool found = false;
  for_each_atom(p, [&](Predicate::Kind k, const std::string& ref) { found = found || (k == kind && ref == id); });
  return found;
}

// Every predicate of the model, with a description of its owner.
template <typename Fn>
void for_each_predicate(const NetModel& m, Fn&& fn) {
  for (const auto& t : m.transitions)
    if (t.guard) fn(*t.guard, "guard of " + t.id);
  for (const auto& [name, pred] : m.forbidden) fn(pred, "forbidden predicate " + name);
  for (const auto& [id, mode] : m.modes)
    for (const auto& [t, pred] : mode.guard_overrides) fn(pred, "mode " + id + " override of " + t);
}

void check_place_unreferenced(const NetModel& m, const std::string& id) {
  for (const auto& t : m.transitions)
    for (auto role : {ArcRole::Input, ArcRole::Output, ArcRole::Inhibitor, ArcRole::Read})
      for (const auto& a : t.arcs(role))
        if (a.place == id)
          throw DanglingReference("place '" + id + "' is still connected to transition '" + t.id + "'");
  for_each_predicate(m, [&](const Predicate& p, const std::string& owner) {
    if (predicate_mentions(p, Predicate::Kind::Tokens, id))
      throw DanglingReference("place '" + id + "' is still referenced by " + owner);
  });
  for (const auto& [rule_id, rule] : m.audit_rules)
    if (const auto* o = std::get_if<OccupancyThreshold>(&rule.kind); o && o->place == id)
      throw DanglingReference("place '" + id + "' is still referenced by audit rule " + rule_id);
  for (const auto& [mode_id, mode] : m.modes)
    if (mode_place_id(mode_id) == id)
      throw DanglingReference("place '" + id + "' holds the token of mode " + mode_id);
}

void check_transition_unreferenced(const NetModel& m, const std::string& id) {
  for_each_predicate(m, [&](const Predicate& p, const std::string& owner) {
    if (predicate_mentions(p, Predicate::Kind::Counter, id))
      throw DanglingReference("transition '" + id + "' is still referenced by " + owner);
  });
  for (const auto& [rule_id, rule] : m.audit_rules) {
    const std::string* ref = nullptr;
    if (const auto* c = std::get_if<CounterThreshold>(&rule.kind)) ref = &c->transition;
    if (const auto* r = std::get_if<RateThreshold>(&rule.kind)) ref = &r->transition;
    if (ref != nullptr && *ref == id)
      throw DanglingReference("transition '" + id + "' is still referenced by audit rule " + rule_id);
  }
  for (const auto& [mode_id, mode] : m.modes)
    if (mode.disabled.contains(id) || mode.guard_overrides.contains(id))
      throw DanglingReference("transition '" + id + "' is still referenced by mode " + mode_id);
}

TransitionDef& transition_of(NetModel& m, const std::string& id) {
  TransitionDef* t = m.find_transition(id);
  if (t == nullptr) throw UnknownTarget("no transition '" + id + "'");
  return *t;
}

PlaceDef& place_of(NetModel& m, const std::string& id) {
  PlaceDef* p = m.find_place(id);
  if (p == nullptr) throw UnknownTarget("no place '" + id + "'");
  return *p;
}

struct OpApplier {
  NetModel& m;

  void operator()(const AddPlace& o) { m.places.push_back(o.place); }
  void operator()(const RemovePlace& o) {
    place_of(m, o.id);
    check_place_unreferenced(m, o.id);
    std::erase_if(m.places, [&](const PlaceDef& p) { return p.id == o.id; });
  }
  void operator()(const AddTransition& o) { m.transitions.push_back(o.transition); }
  void operator()(const RemoveTransition& o) {
    transition_of(m, o.id);
    check_transition_unreferenced(m, o.id);
    std::erase_if(m.transitions, [&](const TransitionDef& t) { return t.id == o.id; });
  }
  void operator()(const AddArc& o) {
    TransitionDef& t = transition_of(m, o.transition);
    place_of(m, o.arc.place);
    t.arcs(o.role).push_back(o.arc);
  }
  void operator()(const RemoveArc& o) {
    auto& arcs = transition_of(m, o.transition).arcs(o.role);
    const auto removed = std::erase_if(arcs, [&](const Arc& a) { return a.place == o.place; });
    if (removed == 0)
      throw UnknownTarget("transition '" + o.transition + "' has no " + std::string(to_string(o.role)) +
                          " arc on '" + o.place + "'");
  }
  void operator()(const SetGuard& o) { transition_of(m, o.transition).guard = o.guard; }
  void operator()(const SetCapacity& o) { place_of(m, o.place).capacity = o.capacity; }
  void operator()(const AddForbidden& o) {
    if (!m.forbidden.emplace(o.name, o.predicate).second)
      throw ResultingModelInvalid(
          {{StructureError::Rule::DuplicateId, o.name, "forbidden predicate already exists"}});
  }
  void operator()(const RemoveForbidden& o) {
    if (!m.forbidden.contains(o.name)) throw UnknownTarget("no forbidden predicate '" + o.name + "'");
    for (const auto& [rule_id, rule] : m.audit_rules)
      if (const auto* pr = std::get_if<PressureThreshold>(&rule.kind); pr && pr->predicate == o.name)
        throw DanglingReference("forbidden predicate '" + o.name + "' is still used by audit rule " + rule_id);
    m.forbidden.erase(o.name);
  }
  void operator()(const SetLabel& o) {
    if (PlaceDef* p = m.find_place(o.id)) p->label = o.label;
    else if (TransitionDef* t = m.find_transition(o.id)) t->label = o.label;
    else throw UnknownTarget("no place or transition '" + o.id + "'");
  }
  void operator()(const SwitchMode& o) {
    if (!m.modes.contains(o.mode)) throw UnknownTarget("no mode '" + o.mode + "'");
    for (const auto& [id, mode] : m.modes)
      place_of(m, mode_place_id(id)).initial = id == o.mode ? 1 : 0;
  }
};

}  // namespace

NetModel apply_patch(const NetModel& model, const Patch& patch) {
  NetModel m = model;
  for (const auto& op : patch.ops) std::visit(OpApplier{m}, op);
  try {
    m = expand_macros(ModelDraft{std::move(m), {}, std::nullopt});
  } catch (const MacroError& e) {
    throw ResultingModelInvalid({{StructureError::Rule::InvalidMode, "", e.what()}});
  }
  if (auto errors = validate_net(m); !errors.empty()) throw ResultingModelInvalid(std::move(errors));
  return m;
}

// ---- verification ----------------------------------------------------------

bool VerificationReport::forbidden_set_changed() const {
  return std::any_of(predicates.begin(), predicates.end(),
                     [](const PredicateComparison& c) { return c.added() || c.removed(); });
}

bool VerificationReport::any_regression() const {
  return std::any_of(predicates.begin(), predicates.end(), [](const PredicateComparison& c) { return c.regression; });
}

bool VerificationReport::safe_to_unsafe() const {
  return std::any_of(predicates.begin(), predicates.end(), [](const PredicateComparison& c) {
    return c.before && c.after && c.before->safe() && c.after->unsafe();
  });
}

VerificationReport verify_patch(const NetModel& model, const Patch& patch, const ExplorationBound& bound,
                                unsigned workers) {
  const NetModel patched = apply_patch(model, patch);
  const Net pre(model), post(patched);
  const ReachGraph g_pre = explore(pre, bound, workers);
  const ReachGraph g_post = explore(post, bound, workers);

  VerificationReport r;
  r.patch_id = patch.id();
  r.bound = bound;
  r.states_before = g_pre.nodes.size();
  r.states_after = g_post.nodes.size();
  r.truncated_before = g_pre.truncated;
  r.truncated_after = g_post.truncated;

  std::set<std::string> names;
  for (const auto& [name, _] : model.forbidden) names.insert(name);
  for (const auto& [name, _] : patched.forbidden) names.insert(name);
  for (const auto& name : names) {
    PredicateComparison c;
    c.name = name;
    if (auto it = model.forbidden.find(name); it != model.forbidden.end())
      c.before = check_predicate(pre, g_pre, it->second, name);
    if (auto it = patched.forbidden.find(name); it != patched.forbidden.end())
      c.after = check_predicate(post, g_post, it->second, name);
    c.regression = c.before && c.after && c.before->safe() && !c.after->safe();
    r.predicates.push_back(std::move(c));
  }
  return r;
}

std::string model_hash(const NetModel& model) { return detail::sha256_hex(serialize_model(model).text); }

// ---- log -------------------------------------------------------------------

namespace {

nlohmann::json entry_json(const LogEntry& e) {
  return {{"timestamp", e.timestamp}, {"patch_id", e.patch_id},   {"author", e.author},
          {"rationale", e.rationale}, {"pre_hash", e.pre_hash},   {"post_hash", e.post_hash},
          {"patch_text", e.patch_text}, {"verdicts", e.verdicts}};
}

LogEntry entry_from_json(const nlohmann::json& j) {
  LogEntry e;
  e.timestamp = j.at("timestamp").get<std::string>();
  e.patch_id = j.at("patch_id").get<std::string>();
  e.author = j.value("author", "");
  e.rationale = j.value("rationale", "");
  e.pre_hash = j.at("pre_hash").get<std::string>();
  e.post_hash = j.at("post_hash").get<std::string>();
  e.patch_text = j.at("patch_text").get<std::string>();
  e.verdicts = j.value("verdicts", std::map<std::string, std::string>{});
  return e;
}

std::string verdict_text(const std::optional<Verdict>& v) { return v ? describe(*v) : "absent"; }

}  // namespace

void GovernanceLog::append(LogEntry entry) {
  if (!entries_.empty() && entries_.back().post_hash != entry.pre_hash)
    throw HashChainBroken("entry pre-hash " + entry.pre_hash + " does not match previous post-hash " +
                          entries_.back().post_hash);
  entries_.push_back(std::move(entry));
}

std::optional<std::size_t> GovernanceLog::first_break() const {
  for (std::size_t i = 1; i < entries_.size(); ++i)
    if (entries_[i].pre_hash != entries_[i - 1].post_hash) return i;
  return std::nullopt;
}

std::string GovernanceLog::to_jsonl() const {
  std::string out;
  for (const auto& e : entries_) out += entry_json(e).dump() + "\n";
  return out;
}

GovernanceLog GovernanceLog::from_jsonl(std::string_view text) {
  GovernanceLog log;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      log.append(entry_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(std::string("malformed governance log line: ") + e.what());
    }
  }
  return log;
}

GovernanceLog GovernanceLog::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_jsonl(ss.str());
}

void GovernanceLog::save(const std::filesystem::path& path) const {
  const GovernanceLog on_disk = load(path);
  if (on_disk.size() > size() ||
      !std::equal(on_disk.entries_.begin(), on_disk.entries_.end(), entries_.begin()))
    throw HashChainBroken("governance log on disk has diverged from " + path.string());
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw Error("cannot write governance log " + path.string());
  for (std::size_t i = on_disk.size(); i < entries_.size(); ++i) out << entry_json(entries_[i]).dump() << '\n';
}

GovernanceLog record_decision(GovernanceLog log, const NetModel& pre, const NetModel& post, const Patch& patch,
                              const VerificationReport& report, std::string timestamp) {
  if (report.patch_id != patch.id()) throw Error("verification report belongs to a different patch");
  LogEntry e;
  e.timestamp = timestamp.empty() ? utc_timestamp() : std::move(timestamp);
  e.patch_id = patch.id();
  e.author = patch.author;
  e.rationale = patch.rationale;
  e.pre_hash = model_hash(pre);
  e.post_hash = model_hash(post);
  e.patch_text = serialize_patch(patch);
  for (const auto& c : report.predicates) e.verdicts[c.name] = verdict_text(c.before) + " -> " + verdict_text(c.after);
  log.append(std::move(e));
  return log;
}

NetModel replay(const NetModel& genesis, const GovernanceLog& log) {
  NetModel current = genesis;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const LogEntry& e = log.entries()[i];
    if (model_hash(current) != e.pre_hash)
      throw HashChainBroken("entry " + std::to_string(i) + " does not start from the replayed model");
    const Patch patch = parse_patch({e.patch_text, "<log>"});
    if (patch.id() != e.patch_id) throw HashChainBroken("entry " + std::to_string(i) + " patch id mismatch");
    current = apply_patch(current, patch);
    if (model_hash(current) != e.post_hash)
      throw HashChainBroken("entry " + std::to_string(i) + " does not reproduce its post-hash");
  }
  return current;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace respetri
