#include "respetri/net.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <unordered_set>

#include "net_data.hpp"

namespace respetri {

std::string_view to_string(ArcRole role) noexcept {
  switch (role) {
    case ArcRole::Input: return "in";
    case ArcRole::Output: return "out";
    case ArcRole::Inhibitor: return "inhibit";
    case ArcRole::Read: return "read";
  }
  return "?";
}

std::vector<Arc>& TransitionDef::arcs(ArcRole role) {
  switch (role) {
    case ArcRole::Input: return inputs;
    case ArcRole::Output: return outputs;
    case ArcRole::Inhibitor: return inhibitors;
    case ArcRole::Read: return reads;
  }
  return inputs;
}

const std::vector<Arc>& TransitionDef::arcs(ArcRole role) const {
  return const_cast<TransitionDef*>(this)->arcs(role);
}

std::string mode_place_id(std::string_view mode) { return "mode_" + std::string(mode); }

const PlaceDef* NetModel::find_place(std::string_view id) const {
  auto it = std::find_if(places.begin(), places.end(), [&](const PlaceDef& p) { return p.id == id; });
  return it == places.end() ? nullptr : &*it;
}

PlaceDef* NetModel::find_place(std::string_view id) {
  return const_cast<PlaceDef*>(std::as_const(*this).find_place(id));
}

const TransitionDef* NetModel::find_transition(std::string_view id) const {
  auto it = std::find_if(transitions.begin(), transitions.end(),
                         [&](const TransitionDef& t) { return t.id == id; });
  return it == transitions.end() ? nullptr : &*it;
}

TransitionDef* NetModel::find_transition(std::string_view id) {
  return const_cast<TransitionDef*>(std::as_const(*this).find_transition(id));
}

namespace {

NetModel sorted_copy(NetModel m) {
  std::sort(m.places.begin(), m.places.end(),
            [](const PlaceDef& a, const PlaceDef& b) { return a.id < b.id; });
  std::sort(m.transitions.begin(), m.transitions.end(),
            [](const TransitionDef& a, const TransitionDef& b) { return a.id < b.id; });
  for (auto& t : m.transitions) {
    for (auto role : {ArcRole::Input, ArcRole::Output, ArcRole::Inhibitor, ArcRole::Read})
      std::sort(t.arcs(role).begin(), t.arcs(role).end());
  }
  return m;
}

}  // namespace

bool structurally_equal(const NetModel& a, const NetModel& b) {
  const NetModel sa = sorted_copy(a);
  const NetModel sb = sorted_copy(b);
  return sa.places == sb.places && sa.transitions == sb.transitions &&
         sa.forbidden == sb.forbidden && sa.audit_rules == sb.audit_rules &&
         sa.modes == sb.modes && sa.metadata == sb.metadata;
}

std::string_view to_string(StructureError::Rule rule) noexcept {
  using R = StructureError::Rule;
  switch (rule) {
    case R::DuplicateId: return "DuplicateId";
    case R::InvalidIdentifier: return "InvalidIdentifier";
    case R::UnknownEndpoint: return "UnknownEndpoint";
    case R::InvalidWeight: return "InvalidWeight";
    case R::InvalidCapacity: return "InvalidCapacity";
    case R::InitialExceedsCapacity: return "InitialExceedsCapacity";
    case R::ConflictingArcRoles: return "ConflictingArcRoles";
    case R::DuplicateArc: return "DuplicateArc";
    case R::UnknownReference: return "UnknownReference";
    case R::InvalidMode: return "InvalidMode";
    case R::InvalidAuditRule: return "InvalidAuditRule";
  }
  return "?";
}

namespace {

bool is_reserved(std::string_view id) {
  return id == "and" || id == "or" || id == "not" || id == "mode" || id == "true" ||
         id == "false";
}

bool is_identifier(std::string_view id) {
  if (id.empty()) return false;
  const auto first = static_cast<unsigned char>(id.front());
  if (!(std::isalpha(first) || first == '_')) return false;
  for (char c : id) {
    const auto u = static_cast<unsigned char>(c);
    if (u >= 0x80 || !(std::isalnum(u) || u == '_')) return false;
  }
  return !is_reserved(id);
}

class Validator {
 public:
  explicit Validator(const NetModel& m) : m_(m) {}

  std::vector<StructureError> run() {
    identifiers();
    places();
    transitions();
    for (const auto& [name, pred] : m_.forbidden) predicate(pred, "forbidden " + name);
    audit_rules();
    modes();
    return std::move(errors_);
  }

 private:
  void add(StructureError::Rule rule, std::string subject, std::string message) {
    errors_.push_back({rule, std::move(subject), std::move(message)});
  }

  void identifiers() {
    for (const auto& p : m_.places) {
      if (!is_identifier(p.id)) add(StructureError::Rule::InvalidIdentifier, p.id, "invalid place identifier");
      if (!ids_.insert(p.id).second)
        add(StructureError::Rule::DuplicateId, p.id, "identifier declared more than once");
      place_ids_.insert(p.id);
    }
    for (const auto& t : m_.transitions) {
      if (!is_identifier(t.id))
        add(StructureError::Rule::InvalidIdentifier, t.id, "invalid transition identifier");
      if (!ids_.insert(t.id).second)
        add(StructureError::Rule::DuplicateId, t.id, "identifier declared more than once");
      transition_ids_.insert(t.id);
      if (t.counted) counted_.insert(t.id);
    }
    for (const auto& [id, mode] : m_.modes)
      if (!is_identifier(id) || mode.id != id)
        add(StructureError::Rule::InvalidIdentifier, id, "invalid mode identifier");
  }

  void places() {
    for (const auto& p : m_.places) {
      if (!p.capacity) continue;
      if (*p.capacity < 1) {
        add(StructureError::Rule::InvalidCapacity, p.id, "capacity must be at least 1");
      } else if (p.initial > *p.capacity) {
        add(StructureError::Rule::InitialExceedsCapacity, p.id,
            "initial tokens " + std::to_string(p.initial) + " exceed capacity " +
                std::to_string(*p.capacity));
      }
    }
  }

  void transitions() {
    for (const auto& t : m_.transitions) {
      for (auto role : {ArcRole::Input, ArcRole::Output, ArcRole::Inhibitor, ArcRole::Read}) {
        std::set<std::string> seen;
        for (const auto& arc : t.arcs(role)) {
          if (!place_ids_.contains(arc.place))
            add(StructureError::Rule::UnknownEndpoint, arc.place,
                "transition " + t.id + " has an arc to undeclared place");
          if (arc.weight < 1)
            add(StructureError::Rule::InvalidWeight, t.id + ":" + arc.place,
                "arc weight must be at least 1");
          if (!seen.insert(arc.place).second)
            add(StructureError::Rule::DuplicateArc, t.id + ":" + arc.place,
                "duplicate " + std::string(to_string(role)) + " arc");
        }
      }
      for (const auto& in : t.inputs)
        for (const auto& inh : t.inhibitors)
          if (in.place == inh.place)
            add(StructureError::Rule::ConflictingArcRoles, t.id + ":" + in.place,
                "place is both input and inhibitor");
      if (t.guard) predicate(*t.guard, "guard of " + t.id);
    }
  }

  void predicate(const Predicate& p, const std::string& where) {
    for_each_atom(p, [&](Predicate::Kind kind, const std::string& ref) {
      switch (kind) {
        case Predicate::Kind::Tokens:
          if (!place_ids_.contains(ref))
            add(StructureError::Rule::UnknownReference, ref, where + " names an undeclared place");
          break;
        case Predicate::Kind::Counter:
          if (!counted_.contains(ref))
            add(StructureError::Rule::UnknownReference, ref,
                where + " reads the counter of a transition that is not counted");
          break;
        case Predicate::Kind::Mode:
          if (!m_.modes.contains(ref))
            add(StructureError::Rule::UnknownReference, ref, where + " names an undeclared mode");
          break;
        default:
          break;
      }
    });
  }

  void audit_rules() {
    for (const auto& [id, rule] : m_.audit_rules) {
      if (rule.id != id || !is_identifier(id))
        add(StructureError::Rule::InvalidIdentifier, id, "invalid audit rule identifier");
      std::visit(
          [&](const auto& k) {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, CounterThreshold>) {
              if (!transition_ids_.contains(k.transition))
                add(StructureError::Rule::UnknownReference, k.transition, "audit " + id);
              if (k.threshold < 0)
                add(StructureError::Rule::InvalidAuditRule, id, "threshold must be nonnegative");
            } else if constexpr (std::is_same_v<K, RateThreshold>) {
              if (!transition_ids_.contains(k.transition))
                add(StructureError::Rule::UnknownReference, k.transition, "audit " + id);
              if (k.max_count < 0 || k.window < 1)
                add(StructureError::Rule::InvalidAuditRule, id, "rate needs max >= 0 and window >= 1");
            } else if constexpr (std::is_same_v<K, OccupancyThreshold>) {
              if (!place_ids_.contains(k.place))
                add(StructureError::Rule::UnknownReference, k.place, "audit " + id);
              if (k.level < 0)
                add(StructureError::Rule::InvalidAuditRule, id, "level must be nonnegative");
            } else {
              if (!m_.forbidden.contains(k.predicate))
                add(StructureError::Rule::UnknownReference, k.predicate, "audit " + id);
              if (k.max_distance < 0)
                add(StructureError::Rule::InvalidAuditRule, id, "distance must be nonnegative");
            }
          },
          rule.kind);
    }
  }

  void modes() {
    if (m_.modes.empty()) return;
    Tokens active = 0;
    for (const auto& [id, mode] : m_.modes) {
      const PlaceDef* place = m_.find_place(mode_place_id(id));
      if (place == nullptr) {
        add(StructureError::Rule::InvalidMode, id, "mode place " + mode_place_id(id) + " is missing");
        continue;
      }
      active += place->initial;
      for (const auto& t : mode.disabled)
        if (!transition_ids_.contains(t))
          add(StructureError::Rule::UnknownReference, t, "mode " + id + " disables it");
      for (const auto& [t, pred] : mode.guard_overrides) {
        if (!transition_ids_.contains(t))
          add(StructureError::Rule::UnknownReference, t, "mode " + id + " overrides its guard");
        predicate(pred, "mode " + id + " override");
      }
    }
    if (active != 1)
      add(StructureError::Rule::InvalidMode, "modes",
          "exactly one mode place must be marked initially, found " + std::to_string(active));
  }

  const NetModel& m_;
  std::vector<StructureError> errors_;
  std::set<std::string> ids_;
  std::set<std::string> place_ids_;
  std::set<std::string> transition_ids_;
  std::set<std::string> counted_;
};

std::string describe(const std::vector<StructureError>& errors) {
  std::ostringstream os;
  os << "model is invalid:";
  for (const auto& e : errors) os << ' ' << to_string(e.rule) << '(' << e.subject << ')';
  return os.str();
}

}  // namespace

std::vector<StructureError> validate_net(const NetModel& model) { return Validator(model).run(); }

ModelInvalid::ModelInvalid(std::vector<StructureError> errors)
    : Error(describe(errors)), errors_(std::move(errors)) {}

std::size_t MarkingHash::operator()(const Marking& m) const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](std::uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  };
  for (Tokens t : m.tokens) mix(t);
  mix(0xffffffffULL);
  for (Tokens c : m.counters) mix(c);
  return static_cast<std::size_t>(h);
}

// ---------------------------------------------------------------------------
// Predicate compilation and evaluation

namespace detail {

namespace {

CompiledPredicateNode compile_node(const NetData& data, const Predicate& p) {
  CompiledPredicateNode n;
  n.kind = p.kind;
  n.cmp = p.cmp;
  n.value = p.value;
  switch (p.kind) {
    case Predicate::Kind::Tokens: {
      auto it = data.place_index.find(p.ref);
      if (it == data.place_index.end()) throw UnknownReference(p.ref);
      n.index = it->second;
      break;
    }
    case Predicate::Kind::Counter: {
      auto it = data.transition_index.find(p.ref);
      if (it == data.transition_index.end()) throw UnknownReference(p.ref);
      const auto slot = data.transitions[it->second].counter_slot;
      if (!slot) throw UnknownReference("#" + p.ref);
      n.index = static_cast<std::uint32_t>(*slot);
      break;
    }
    case Predicate::Kind::Mode: {
      auto it = data.place_index.find(mode_place_id(p.ref));
      if (it == data.place_index.end() || !data.model.modes.contains(p.ref))
        throw UnknownReference(p.ref);
      n.kind = Predicate::Kind::Tokens;
      n.index = it->second;
      n.cmp = Cmp::Ge;
      n.value = 1;
      break;
    }
    default:
      for (const auto& c : p.children) n.children.push_back(compile_node(data, c));
      break;
  }
  return n;
}

template <typename TokenFn, typename CounterFn>
bool evaluate(const CompiledPredicateNode& n, const TokenFn& tokens, const CounterFn& counter) {
  switch (n.kind) {
    case Predicate::Kind::Const: return n.value != 0;
    case Predicate::Kind::Tokens: return compare(tokens(n.index), n.cmp, n.value);
    case Predicate::Kind::Counter: return compare(counter(n.index), n.cmp, n.value);
    case Predicate::Kind::Mode: return tokens(n.index) >= 1;
    case Predicate::Kind::Not: return !evaluate(n.children.front(), tokens, counter);
    case Predicate::Kind::And:
      for (const auto& c : n.children)
        if (!evaluate(c, tokens, counter)) return false;
      return true;
    case Predicate::Kind::Or:
      for (const auto& c : n.children)
        if (evaluate(c, tokens, counter)) return true;
      return false;
  }
  return false;
}

}  // namespace

CompiledPredicate compile_predicate(const NetData& data, const Predicate& p) {
  return CompiledPredicate(std::make_shared<const CompiledPredicateNode>(compile_node(data, p)));
}

}  // namespace detail

bool CompiledPredicate::operator()(const Marking& m) const {
  if (!root_) return false;
  return detail::evaluate(
      *root_, [&](std::uint32_t i) { return static_cast<std::int64_t>(m.tokens[i]); },
      [&](std::uint32_t i) { return static_cast<std::int64_t>(m.counters[i]); });
}

bool CompiledPredicate::evaluate_tokens(const std::vector<Tokens>& tokens) const {
  if (!root_) return false;
  return detail::evaluate(
      *root_, [&](std::uint32_t i) { return static_cast<std::int64_t>(tokens[i]); },
      [](std::uint32_t) { return std::int64_t{0}; });
}

// ---------------------------------------------------------------------------
// Net

namespace {

std::vector<detail::IndexedArc> index_arcs(const detail::NetData& d, const std::vector<Arc>& arcs) {
  std::vector<detail::IndexedArc> out;
  out.reserve(arcs.size());
  for (const auto& a : arcs) out.push_back({d.place_index.at(a.place), a.weight});
  return out;
}

bool guard_is_monotone(const Predicate& p) {
  if (!is_upward_closed(p)) return false;
  bool counters = false;
  for_each_atom(p, [&](Predicate::Kind k, const std::string&) {
    if (k == Predicate::Kind::Counter) counters = true;
  });
  return !counters;
}

}  // namespace

Net::Net(NetModel model) {
  if (auto errors = validate_net(model); !errors.empty()) throw ModelInvalid(std::move(errors));

  auto d = std::make_shared<detail::NetData>();
  d->model = std::move(model);
  const NetModel& m = d->model;

  for (const auto& p : m.places) {
    d->place_index.emplace(p.id, static_cast<PlaceIndex>(d->place_ids.size()));
    d->place_ids.push_back(p.id);
    d->capacity.push_back(p.capacity);
    if (p.capacity) d->monotone = false;
  }
  for (const auto& t : m.transitions) {
    const auto index = static_cast<TransitionIndex>(d->transition_ids.size());
    d->transition_index.emplace(t.id, index);
    d->transition_ids.push_back(t.id);
    detail::CompiledTransition ct;
    if (t.counted) {
      ct.counter_slot = d->counter_owner.size();
      d->counter_owner.push_back(index);
    }
    d->transitions.push_back(std::move(ct));
  }
  for (const auto& [id, mode] : m.modes) {
    d->mode_ids.push_back(id);
    d->mode_places.push_back(d->place_index.at(mode_place_id(id)));
  }

  for (std::size_t i = 0; i < m.transitions.size(); ++i) {
    const TransitionDef& t = m.transitions[i];
    auto& ct = d->transitions[i];
    ct.inputs = index_arcs(*d, t.inputs);
    ct.outputs = index_arcs(*d, t.outputs);
    ct.inhibitors = index_arcs(*d, t.inhibitors);
    ct.reads = index_arcs(*d, t.reads);
    if (!ct.inhibitors.empty()) d->monotone = false;

    std::map<PlaceIndex, std::int64_t> delta;
    for (const auto& a : ct.inputs) delta[a.place] -= a.weight;
    for (const auto& a : ct.outputs) delta[a.place] += a.weight;
    for (const auto& [p, v] : delta)
      if (v != 0) ct.delta.emplace_back(p, v);

    if (t.guard) {
      ct.guard = detail::compile_predicate(*d, *t.guard);
      if (!guard_is_monotone(*t.guard)) d->monotone = false;
    }
    bool any_override = false;
    std::vector<std::optional<CompiledPredicate>> overrides;
    for (const auto& [id, mode] : m.modes) {
      auto it = mode.guard_overrides.find(t.id);
      if (it == mode.guard_overrides.end()) {
        overrides.emplace_back();
      } else {
        any_override = true;
        overrides.emplace_back(detail::compile_predicate(*d, it->second));
      }
    }
    if (any_override) {
      ct.mode_guards = std::move(overrides);
      d->monotone = false;
    }
  }
  data_ = std::move(d);
}

const NetModel& Net::model() const noexcept { return data_->model; }
std::size_t Net::place_count() const noexcept { return data_->place_ids.size(); }
std::size_t Net::transition_count() const noexcept { return data_->transition_ids.size(); }
std::size_t Net::counter_count() const noexcept { return data_->counter_owner.size(); }
const std::string& Net::place_id(PlaceIndex p) const { return data_->place_ids.at(p); }
const std::string& Net::transition_id(TransitionIndex t) const { return data_->transition_ids.at(t); }

std::optional<PlaceIndex> Net::find_place(std::string_view id) const {
  auto it = data_->place_index.find(std::string(id));
  if (it == data_->place_index.end()) return std::nullopt;
  return it->second;
}

std::optional<TransitionIndex> Net::find_transition(std::string_view id) const {
  auto it = data_->transition_index.find(std::string(id));
  if (it == data_->transition_index.end()) return std::nullopt;
  return it->second;
}

TransitionIndex Net::transition_index(std::string_view id) const {
  if (auto t = find_transition(id)) return *t;
  throw UnknownTransition(std::string(id));
}

std::optional<std::size_t> Net::counter_slot(TransitionIndex t) const {
  return data_->transitions.at(t).counter_slot;
}

TransitionIndex Net::counter_transition(std::size_t slot) const { return data_->counter_owner.at(slot); }

Marking Net::initial_marking() const {
  Marking m;
  m.tokens.reserve(place_count());
  for (const auto& p : data_->model.places) m.tokens.push_back(p.initial);
  m.counters.assign(counter_count(), 0);
  return m;
}

CompiledPredicate Net::compile(const Predicate& p) const { return detail::compile_predicate(*data_, p); }

CompiledPredicate Net::forbidden(std::string_view name) const {
  auto it = data_->model.forbidden.find(std::string(name));
  if (it == data_->model.forbidden.end()) throw UnknownReference(std::string(name));
  return compile(it->second);
}

bool Net::is_monotone() const noexcept { return data_->monotone; }

std::optional<Tokens> Net::capacity(PlaceIndex p) const { return data_->capacity.at(p); }

// ---------------------------------------------------------------------------
// Token game

namespace {

const CompiledPredicate* effective_guard(const detail::NetData& d, const detail::CompiledTransition& t,
                                         const Marking& m) {
  if (!t.mode_guards.empty()) {
    for (std::size_t i = 0; i < d.mode_places.size(); ++i) {
      if (m.tokens[d.mode_places[i]] >= 1) {
        if (t.mode_guards[i]) return &*t.mode_guards[i];
        break;
      }
    }
  }
  return t.guard ? &*t.guard : nullptr;
}

}  // namespace

bool is_enabled(const Net& net, const Marking& m, TransitionIndex index) {
  const auto& d = net.data();
  const auto& t = d.transitions.at(index);
  for (const auto& a : t.inputs)
    if (m.tokens[a.place] < a.weight) return false;
  for (const auto& a : t.reads)
    if (m.tokens[a.place] < a.weight) return false;
  for (const auto& a : t.inhibitors)
    if (m.tokens[a.place] >= a.weight) return false;
  for (const auto& [p, v] : t.delta) {
    if (v > 0 && d.capacity[p] && static_cast<std::int64_t>(m.tokens[p]) + v > *d.capacity[p])
      return false;
  }
  if (const CompiledPredicate* g = effective_guard(d, t, m); g != nullptr && !(*g)(m)) return false;
  return true;
}

bool is_enabled(const Net& net, const Marking& m, std::string_view t) {
  return is_enabled(net, m, net.transition_index(t));
}

std::vector<TransitionIndex> enabled_set(const Net& net, const Marking& m) {
  std::vector<TransitionIndex> out;
  for (TransitionIndex t = 0; t < net.transition_count(); ++t)
    if (is_enabled(net, m, t)) out.push_back(t);
  return out;
}

Marking detail::fire_unchecked(const NetData& d, const Marking& m, TransitionIndex index) {
  const auto& t = d.transitions[index];
  Marking next = m;
  for (const auto& [p, v] : t.delta)
    next.tokens[p] = static_cast<Tokens>(static_cast<std::int64_t>(next.tokens[p]) + v);
  if (t.counter_slot) ++next.counters[*t.counter_slot];
  return next;
}

Marking fire(const Net& net, const Marking& m, TransitionIndex index) {
  if (!is_enabled(net, m, index)) throw NotEnabled(net.transition_id(index));
  return detail::fire_unchecked(net.data(), m, index);
}

Marking fire(const Net& net, const Marking& m, std::string_view t) {
  return fire(net, m, net.transition_index(t));
}

bool eval_guard(const Net& net, const Predicate& pred, const Marking& m) { return net.compile(pred)(m); }

Marking make_marking(const Net& net, const std::map<std::string, Tokens>& tokens,
                     const std::map<std::string, Tokens>& counters) {
  Marking m;
  m.tokens.assign(net.place_count(), 0);
  m.counters.assign(net.counter_count(), 0);
  for (const auto& [id, n] : tokens) {
    auto p = net.find_place(id);
    if (!p) throw UnknownReference(id);
    m.tokens[*p] = n;
  }
  for (const auto& [id, n] : counters) {
    auto slot = net.counter_slot(net.transition_index(id));
    if (!slot) throw UnknownReference("#" + id);
    m.counters[*slot] = n;
  }
  return m;
}

Tokens tokens_at(const Net& net, const Marking& m, std::string_view place) {
  auto p = net.find_place(place);
  if (!p) throw UnknownReference(std::string(place));
  return m.tokens[*p];
}

Tokens counter_of(const Net& net, const Marking& m, std::string_view transition) {
  auto slot = net.counter_slot(net.transition_index(transition));
  if (!slot) throw UnknownReference("#" + std::string(transition));
  return m.counters[*slot];
}

std::string format_marking(const Net& net, const Marking& m) {
  std::string out = "{";
  bool first = true;
  for (PlaceIndex p = 0; p < m.tokens.size(); ++p) {
    if (m.tokens[p] == 0) continue;
    if (!first) out += ", ";
    first = false;
    out += net.place_id(p) + ":" + std::to_string(m.tokens[p]);
  }
  if (!m.counters.empty()) {
    out += " |";
    for (std::size_t s = 0; s < m.counters.size(); ++s)
      out += " #" + net.transition_id(net.counter_transition(s)) + ":" + std::to_string(m.counters[s]);
  }
  out += "}";
  return out;
}

}  // namespace respetri
