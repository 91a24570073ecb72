#include "respetri/predicate.hpp"

#include <utility>

namespace respetri {

std::string_view to_string(Cmp cmp) noexcept {
  switch (cmp) {
    case Cmp::Lt: return "<";
    case Cmp::Le: return "<=";
    case Cmp::Eq: return "=";
    case Cmp::Ge: return ">=";
    case Cmp::Gt: return ">";
  }
  return "?";
}

Predicate Predicate::constant(bool v) {
  Predicate p;
  p.kind = Kind::Const;
  p.value = v ? 1 : 0;
  return p;
}

Predicate Predicate::tokens(std::string place, Cmp cmp, std::int64_t k) {
  Predicate p;
  p.kind = Kind::Tokens;
  p.ref = std::move(place);
  p.cmp = cmp;
  p.value = k;
  return p;
}

Predicate Predicate::counter(std::string transition, Cmp cmp, std::int64_t k) {
  Predicate p;
  p.kind = Kind::Counter;
  p.ref = std::move(transition);
  p.cmp = cmp;
  p.value = k;
  return p;
}

Predicate Predicate::mode(std::string mode_id) {
  Predicate p;
  p.kind = Kind::Mode;
  p.ref = std::move(mode_id);
  p.cmp = Cmp::Eq;
  p.value = 1;
  return p;
}

Predicate Predicate::negate(Predicate inner) {
  Predicate p;
  p.kind = Kind::Not;
  p.value = 0;
  p.children.push_back(std::move(inner));
  return p;
}

Predicate Predicate::all(std::vector<Predicate> ps) {
  if (ps.size() == 1) return std::move(ps.front());
  Predicate p;
  p.kind = Kind::And;
  p.value = 0;
  p.children = std::move(ps);
  return p;
}

Predicate Predicate::any(std::vector<Predicate> ps) {
  if (ps.size() == 1) return std::move(ps.front());
  Predicate p;
  p.kind = Kind::Or;
  p.value = 0;
  p.children = std::move(ps);
  return p;
}

bool is_upward_closed(const Predicate& p) {
  switch (p.kind) {
    case Predicate::Kind::Const:
    case Predicate::Kind::Mode:
      return true;
    case Predicate::Kind::Tokens:
    case Predicate::Kind::Counter:
      return p.cmp == Cmp::Ge || p.cmp == Cmp::Gt;
    case Predicate::Kind::Not:
      return false;
    case Predicate::Kind::And:
    case Predicate::Kind::Or:
      for (const auto& c : p.children)
        if (!is_upward_closed(c)) return false;
      return true;
  }
  return false;
}

bool mentions_counters_or_modes(const Predicate& p) {
  bool found = false;
  for_each_atom(p, [&](Predicate::Kind k, const std::string&) {
    if (k == Predicate::Kind::Counter || k == Predicate::Kind::Mode) found = true;
  });
  return found;
}

namespace {

int precedence(Predicate::Kind k) {
  switch (k) {
    case Predicate::Kind::Or: return 1;
    case Predicate::Kind::And: return 2;
    default: return 3;
  }
}

void print(const Predicate& p, std::string& out);

void print_child(const Predicate& parent, const Predicate& child, std::string& out) {
  const bool binary = child.kind == Predicate::Kind::And || child.kind == Predicate::Kind::Or;
  // Same-kind nesting keeps its parentheses so that printing and parsing
  // preserve the tree shape exactly.
  const bool parens = binary && (precedence(child.kind) <= precedence(parent.kind));
  if (parens) out += '(';
  print(child, out);
  if (parens) out += ')';
}

void print(const Predicate& p, std::string& out) {
  switch (p.kind) {
    case Predicate::Kind::Const:
      out += p.value != 0 ? "true" : "false";
      return;
    case Predicate::Kind::Tokens:
      out += p.ref;
      break;
    case Predicate::Kind::Counter:
      out += '#';
      out += p.ref;
      break;
    case Predicate::Kind::Mode:
      out += "mode = ";
      out += p.ref;
      return;
    case Predicate::Kind::Not:
      out += "not ";
      print_child(p, p.children.front(), out);
      return;
    case Predicate::Kind::And:
    case Predicate::Kind::Or: {
      const char* sep = p.kind == Predicate::Kind::And ? " and " : " or ";
      for (std::size_t i = 0; i < p.children.size(); ++i) {
        if (i != 0) out += sep;
        print_child(p, p.children[i], out);
      }
      return;
    }
  }
  out += ' ';
  out += to_string(p.cmp);
  out += ' ';
  out += std::to_string(p.value);
}

}  // namespace

std::string to_string(const Predicate& p) {
  std::string out;
  print(p, out);
  return out;
}

}  // namespace respetri
