#include "respetri/dsl.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "lexer.hpp"

namespace respetri {

using detail::LineParser;
using detail::Token;

std::string format_error(const ModelSource& src, const ParseError& e) {
  return src.origin + ":" + std::to_string(e.position.line) + ":" + std::to_string(e.position.column) +
         ": " + e.message;
}

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

namespace {

std::optional<ArcRole> arc_role(std::string_view kw) {
  if (kw == "in") return ArcRole::Input;
  if (kw == "out") return ArcRole::Output;
  if (kw == "inhibit") return ArcRole::Inhibitor;
  if (kw == "read") return ArcRole::Read;
  return std::nullopt;
}

class ModelParser {
 public:
  explicit ModelParser(std::vector<ParseError>& errors) : errors_(errors) {}

  ModelDraft parse(std::string_view text) {
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
      std::size_t end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      ++line_no;
      line(text.substr(start, end - start), line_no);
      start = end + 1;
    }
    return std::move(draft_);
  }

 private:
  void line(std::string_view raw, std::size_t line_no) {
    auto tokens = detail::tokenize_line(raw, line_no, errors_);
    LineParser p(tokens, errors_);
    if (p.at_end()) return;
    const Token& head = p.peek();
    if (head.kind != Token::Kind::Ident) {
      p.error(head, "expected a declaration keyword, found " + detail::describe(head),
              {"place", "trans", "forbidden", "audit", "mode", "ratelimit", "meta"});
      return;
    }
    const std::string kw = head.text;
    p.next();
    if (kw == "place") place(p);
    else if (kw == "trans") transition(p);
    else if (kw == "forbidden") forbidden(p, head);
    else if (kw == "audit") audit(p, head);
    else if (kw == "mode") mode(p);
    else if (kw == "ratelimit") ratelimit(p, head);
    else if (kw == "meta") meta(p);
    else
      p.error(head, "unknown keyword '" + kw + "'",
              {"place", "trans", "forbidden", "audit", "mode", "ratelimit", "meta"});
  }

  void place(LineParser& p) {
    auto id = p.expect_ident("place identifier");
    if (!id) return;
    PlaceDef def{*id, 0, std::nullopt, ""};
    bool seen_init = false, seen_cap = false, seen_label = false;
    while (!p.at_end()) {
      const Token& t = p.peek();
      if (p.at_keyword("init") && !seen_init) {
        p.next();
        auto n = p.expect_nonnegative("initial tokens");
        if (!n) return;
        def.initial = static_cast<Tokens>(*n);
        seen_init = true;
      } else if (p.at_keyword("cap") && !seen_cap) {
        p.next();
        auto n = p.expect_nonnegative("capacity");
        if (!n) return;
        def.capacity = static_cast<Tokens>(*n);
        seen_cap = true;
      } else if (p.at_keyword("label") && !seen_label) {
        p.next();
        auto s = p.expect_string("label");
        if (!s) return;
        def.label = std::move(*s);
        seen_label = true;
      } else {
        p.error(t, "unexpected " + detail::describe(t) + " in place declaration", {"init", "cap", "label"});
        return;
      }
    }
    draft_.net.places.push_back(std::move(def));
  }

  void transition(LineParser& p) {
    auto id = p.expect_ident("transition identifier");
    if (!id) return;
    TransitionDef def;
    def.id = *id;
    bool seen_label = false;
    while (!p.at_end()) {
      const Token& t = p.peek();
      if (t.kind == Token::Kind::Ident) {
        if (auto role = arc_role(t.text)) {
          p.next();
          auto place = p.expect_ident("place identifier");
          if (!place) return;
          Tokens weight = 1;
          if (p.at_op(":")) {
            p.next();
            auto w = p.expect_nonnegative("arc weight");
            if (!w) return;
            weight = static_cast<Tokens>(*w);
          }
          def.arcs(*role).push_back({*place, weight});
          continue;
        }
        if (t.text == "counted") {
          p.next();
          def.counted = true;
          continue;
        }
        if (t.text == "label" && !seen_label) {
          p.next();
          auto s = p.expect_string("label");
          if (!s) return;
          def.label = std::move(*s);
          seen_label = true;
          continue;
        }
        if (t.text == "guard") {
          p.next();
          auto g = p.predicate();
          if (!g) return;
          def.guard = std::move(*g);
          break;
        }
      }
      p.error(t, "unexpected " + detail::describe(t) + " in transition declaration",
              {"in", "out", "read", "inhibit", "counted", "label", "guard"});
      return;
    }
    draft_.net.transitions.push_back(std::move(def));
  }

  void forbidden(LineParser& p, const Token& head) {
    auto name = p.expect_ident("predicate name");
    if (!name || !p.expect_op(":=")) return;
    auto pred = p.predicate();
    if (!pred) return;
    if (!draft_.net.forbidden.emplace(*name, std::move(*pred)).second)
      p.error(head, "forbidden predicate '" + *name + "' declared more than once");
  }

  void audit(LineParser& p, const Token& head) {
    auto name = p.expect_ident("audit rule name");
    if (!name || !p.expect_op(":=")) return;
    AuditRule rule{*name, CounterThreshold{}};
    if (p.at_keyword("counter")) {
      p.next();
      auto t = p.expect_ident("transition identifier");
      if (!t || !p.expect_op(">")) return;
      auto n = p.expect_nonnegative("threshold");
      if (!n) return;
      rule.kind = CounterThreshold{*t, *n};
    } else if (p.at_keyword("rate")) {
      p.next();
      auto t = p.expect_ident("transition identifier");
      if (!t || !p.expect_keyword("max")) return;
      auto k = p.expect_nonnegative("maximum count");
      if (!k || !p.expect_keyword("per")) return;
      auto w = p.expect_nonnegative("window");
      if (!w) return;
      rule.kind = RateThreshold{*t, *k, *w};
    } else if (p.at_keyword("occupancy")) {
      p.next();
      auto place = p.expect_ident("place identifier");
      if (!place) return;
      auto cmp = p.expect_cmp();
      if (!cmp) return;
      auto n = p.expect_nonnegative("level");
      if (!n) return;
      rule.kind = OccupancyThreshold{*place, *cmp, *n};
    } else if (p.at_keyword("pressure")) {
      p.next();
      auto pred = p.expect_ident("forbidden predicate name");
      if (!pred || !p.expect_op("<=")) return;
      auto d = p.expect_nonnegative("distance");
      if (!d) return;
      rule.kind = PressureThreshold{*pred, *d};
    } else {
      p.error(p.peek(), "expected audit rule kind, found " + detail::describe(p.peek()),
              {"counter", "rate", "occupancy", "pressure"});
      return;
    }
    if (!p.expect_end()) return;
    if (!draft_.net.audit_rules.emplace(*name, std::move(rule)).second)
      p.error(head, "audit rule '" + *name + "' declared more than once");
  }

  void mode(LineParser& p) {
    const Token& id_token = p.peek();
    auto id = p.expect_ident("mode identifier");
    if (!id) return;
    ModeDef& def = draft_.net.modes[*id];
    def.id = *id;
    if (p.at_keyword("override")) {
      p.next();
      auto t = p.expect_ident("transition identifier");
      if (!t || !p.expect_op(":=")) return;
      auto pred = p.predicate();
      if (!pred) return;
      if (!def.guard_overrides.emplace(*t, std::move(*pred)).second)
        p.error(id_token, "mode '" + *id + "' overrides '" + *t + "' more than once");
      return;
    }
    while (!p.at_end()) {
      if (p.at_keyword("initial")) {
        p.next();
        if (draft_.initial_mode && *draft_.initial_mode != *id) {
          p.error(id_token, "more than one initial mode");
          return;
        }
        draft_.initial_mode = *id;
      } else if (p.at_keyword("disable")) {
        p.next();
        auto t = p.expect_ident("transition identifier");
        if (!t) return;
        def.disabled.insert(*t);
      } else {
        p.error(p.peek(), "unexpected " + detail::describe(p.peek()) + " in mode declaration",
                {"initial", "disable", "override"});
        return;
      }
    }
  }

  void ratelimit(LineParser& p, const Token& head) {
    RateLimit rl;
    rl.position = head.position;
    auto t = p.expect_ident("transition identifier");
    if (!t) return;
    rl.transition = *t;
    if (!p.expect_keyword("max")) return;
    auto k = p.expect_nonnegative("maximum count");
    if (!k || !p.expect_keyword("per")) return;
    auto w = p.expect_nonnegative("window");
    if (!w || !p.expect_end()) return;
    rl.max_count = *k;
    rl.window = *w;
    draft_.rate_limits.push_back(std::move(rl));
  }

  void meta(LineParser& p) {
    auto key = p.expect_ident("metadata key");
    if (!key) return;
    auto value = p.expect_string("metadata value");
    if (!value || !p.expect_end()) return;
    draft_.net.metadata[*key] = std::move(*value);
  }

  std::vector<ParseError>& errors_;
  ModelDraft draft_;
};

bool has_arc(const std::vector<Arc>& arcs, std::string_view place) {
  return std::any_of(arcs.begin(), arcs.end(), [&](const Arc& a) { return a.place == place; });
}

void expand_modes(NetModel& net, const std::optional<std::string>& initial) {
  if (net.modes.empty()) return;
  for (const auto& [id, mode] : net.modes) {
    const std::string place = mode_place_id(id);
    if (net.find_place(place) == nullptr)
      net.places.push_back({place, 0, Tokens{1}, "mode " + id});
  }
  if (initial) {
    for (const auto& [id, mode] : net.modes)
      if (PlaceDef* p = net.find_place(mode_place_id(id))) p->initial = id == *initial ? 1 : 0;
  }
  std::set<std::string> restricted;
  for (const auto& [id, mode] : net.modes) restricted.insert(mode.disabled.begin(), mode.disabled.end());
  for (const auto& t_id : restricted) {
    TransitionDef* t = net.find_transition(t_id);
    if (t == nullptr) continue;  // reported by validation
    std::vector<std::string> allowed, blocked;
    for (const auto& [id, mode] : net.modes)
      (mode.disabled.contains(t_id) ? blocked : allowed).push_back(mode_place_id(id));
    if (allowed.size() == 1) {
      if (!has_arc(t->reads, allowed.front())) t->reads.push_back({allowed.front(), 1});
    } else {
      for (const auto& place : blocked)
        if (!has_arc(t->inhibitors, place)) t->inhibitors.push_back({place, 1});
    }
  }
}

void compile_self_loops(NetModel& net) {
  for (auto& t : net.transitions) {
    for (auto in = t.inputs.begin(); in != t.inputs.end();) {
      auto out = std::find_if(t.outputs.begin(), t.outputs.end(),
                              [&](const Arc& a) { return a.place == in->place && a.weight == in->weight; });
      if (out == t.outputs.end()) {
        ++in;
        continue;
      }
      auto read = std::find_if(t.reads.begin(), t.reads.end(), [&](const Arc& a) { return a.place == in->place; });
      if (read == t.reads.end()) t.reads.push_back(*in);
      else read->weight = std::max(read->weight, in->weight);
      t.outputs.erase(out);
      in = t.inputs.erase(in);
    }
  }
}

void expand_rate_limit(NetModel& net, const RateLimit& rl) {
  TransitionDef* target = net.find_transition(rl.transition);
  if (target == nullptr)
    throw MacroError(MacroError::Kind::UnknownTransitionInMacro,
                     "ratelimit names unknown transition '" + rl.transition + "'");
  if (rl.max_count < 1 || rl.window < 1)
    throw MacroError(MacroError::Kind::MacroArity, "ratelimit " + rl.transition +
                                                       " needs max >= 1 and per >= 1");
  const std::string prefix = "rl_" + rl.transition + "_";
  const std::string budget = prefix + "budget";
  if (net.find_place(budget) != nullptr) return;  // already expanded

  const auto k = static_cast<Tokens>(rl.max_count);
  const auto w = static_cast<std::size_t>(rl.window);
  const std::string idle = prefix + "idle";
  auto used = [&](std::size_t i) { return prefix + "used" + std::to_string(i); };
  auto stage = [&](std::size_t i) { return prefix + "stage" + std::to_string(i); };

  // A firing parks one budget token in used0. Each tick walks a control
  // token from stage w-1 down to stage 0, shifting every parked token one
  // slot along the delay line (used w-1 returns to the budget), so a token
  // comes back exactly w ticks after the firing that consumed it.
  net.places.push_back({budget, k, k, "rate budget of " + rl.transition});
  for (std::size_t i = 0; i < w; ++i) net.places.push_back({used(i), 0, k, ""});
  net.places.push_back({idle, 1, Tokens{1}, ""});
  for (std::size_t i = 0; i < w; ++i) net.places.push_back({stage(i), 0, Tokens{1}, ""});

  target->inputs.push_back({budget, 1});
  target->outputs.push_back({used(0), 1});
  target->reads.push_back({idle, 1});

  TransitionDef tick;
  tick.id = prefix + "tick";
  tick.inputs = {{idle, 1}};
  tick.outputs = {{stage(w - 1), 1}};
  tick.label = "rate window tick";
  net.transitions.push_back(std::move(tick));
  for (std::size_t i = w; i-- > 0;) {
    TransitionDef shift;
    shift.id = prefix + "shift" + std::to_string(i);
    shift.inputs = {{used(i), 1}};
    shift.outputs = {{i + 1 == w ? budget : used(i + 1), 1}};
    shift.reads = {{stage(i), 1}};
    net.transitions.push_back(std::move(shift));
    TransitionDef done;
    done.id = prefix + "done" + std::to_string(i);
    done.inputs = {{stage(i), 1}};
    done.inhibitors = {{used(i), 1}};
    done.outputs = {{i == 0 ? idle : stage(i - 1), 1}};
    net.transitions.push_back(std::move(done));
  }
}

}  // namespace

ModelDraft detail::parse_draft(std::string_view text, std::vector<ParseError>& errors) {
  return ModelParser(errors).parse(text);
}

NetModel expand_macros(ModelDraft draft) {
  NetModel net = std::move(draft.net);
  compile_self_loops(net);
  expand_modes(net, draft.initial_mode);
  for (const auto& rl : draft.rate_limits) expand_rate_limit(net, rl);
  return net;
}

ParseResult parse_model(const ModelSource& src) {
  ParseResult result;
  ModelDraft draft = detail::parse_draft(src.text, result.parse_errors);
  if (!result.parse_errors.empty()) return result;
  const auto rate_limits = draft.rate_limits;
  NetModel net;
  try {
    net = expand_macros(std::move(draft));
  } catch (const MacroError& e) {
    SourcePosition at;
    const std::string message = e.what();
    for (const auto& rl : rate_limits)
      if (message.find(" " + rl.transition + " ") != std::string::npos ||
          message.find("'" + rl.transition + "'") != std::string::npos) {
        at = rl.position;
        break;
      }
    result.parse_errors.push_back({at, message, {}});
    return result;
  }
  result.structure_errors = validate_net(net);
  if (result.structure_errors.empty()) result.model = std::move(net);
  return result;
}

ParseResult parse_model_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    ParseResult r;
    r.parse_errors.push_back({{1, 1}, "cannot read " + path.string(), {}});
    return r;
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model({ss.str(), path.string()});
}

namespace {

void write_arcs(std::string& out, std::string_view kw, std::vector<Arc> arcs) {
  std::sort(arcs.begin(), arcs.end());
  for (const auto& a : arcs) {
    out += ' ';
    out += kw;
    out += ' ';
    out += a.place;
    if (a.weight != 1) out += ":" + std::to_string(a.weight);
  }
}

std::string rule_text(const AuditRule& rule) {
  return std::visit(
      [](const auto& k) -> std::string {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, CounterThreshold>) {
          return "counter " + k.transition + " > " + std::to_string(k.threshold);
        } else if constexpr (std::is_same_v<K, RateThreshold>) {
          return "rate " + k.transition + " max " + std::to_string(k.max_count) + " per " +
                 std::to_string(k.window);
        } else if constexpr (std::is_same_v<K, OccupancyThreshold>) {
          return "occupancy " + k.place + " " + std::string(to_string(k.cmp)) + " " + std::to_string(k.level);
        } else {
          return "pressure " + k.predicate + " <= " + std::to_string(k.max_distance);
        }
      },
      rule.kind);
}

}  // namespace

std::string detail::place_line(const PlaceDef& p) {
  std::string out = "place " + p.id;
  if (p.initial != 0) out += " init " + std::to_string(p.initial);
  if (p.capacity) out += " cap " + std::to_string(*p.capacity);
  if (!p.label.empty()) out += " label " + quote(p.label);
  return out;
}

std::string detail::transition_line(const TransitionDef& t) {
  std::string out = "trans " + t.id;
  write_arcs(out, "in", t.inputs);
  write_arcs(out, "read", t.reads);
  write_arcs(out, "inhibit", t.inhibitors);
  write_arcs(out, "out", t.outputs);
  if (t.counted) out += " counted";
  if (!t.label.empty()) out += " label " + quote(t.label);
  if (t.guard) out += " guard " + to_string(*t.guard);
  return out;
}

ModelSource serialize_model(const NetModel& model) {
  std::vector<std::string> blocks;
  std::string out;

  for (const auto& [key, value] : model.metadata) out += "meta " + key + " " + quote(value) + "\n";
  blocks.push_back(std::exchange(out, {}));

  auto places = model.places;
  std::sort(places.begin(), places.end(), [](const PlaceDef& a, const PlaceDef& b) { return a.id < b.id; });
  for (const auto& p : places) out += detail::place_line(p) + "\n";
  blocks.push_back(std::exchange(out, {}));

  std::vector<const TransitionDef*> transitions;
  for (const auto& t : model.transitions) transitions.push_back(&t);
  std::sort(transitions.begin(), transitions.end(),
            [](const TransitionDef* a, const TransitionDef* b) { return a->id < b->id; });
  for (const TransitionDef* t : transitions) out += detail::transition_line(*t) + "\n";
  blocks.push_back(std::exchange(out, {}));

  for (const auto& [name, pred] : model.forbidden) out += "forbidden " + name + " := " + to_string(pred) + "\n";
  blocks.push_back(std::exchange(out, {}));

  for (const auto& [name, rule] : model.audit_rules) out += "audit " + name + " := " + rule_text(rule) + "\n";
  blocks.push_back(std::exchange(out, {}));

  for (const auto& [id, mode] : model.modes) {
    out += "mode " + id;
    const PlaceDef* place = model.find_place(mode_place_id(id));
    if (place != nullptr && place->initial > 0) out += " initial";
    for (const auto& t : mode.disabled) out += " disable " + t;
    out += '\n';
    for (const auto& [t, pred] : mode.guard_overrides)
      out += "mode " + id + " override " + t + " := " + to_string(pred) + "\n";
  }
  blocks.push_back(std::exchange(out, {}));

  for (const auto& b : blocks) {
    if (b.empty()) continue;
    if (!out.empty()) out += '\n';
    out += b;
  }
  return {std::move(out), "<canonical>"};
}

Predicate parse_predicate(std::string_view text) {
  std::vector<ParseError> errors;
  auto tokens = detail::tokenize_line(text, 1, errors, false);
  if (!errors.empty()) throw PredicateSyntaxError(errors.front());
  LineParser p(tokens, errors);
  auto pred = p.predicate();
  if (!pred) throw PredicateSyntaxError(errors.front());
  return std::move(*pred);
}

}  // namespace respetri
