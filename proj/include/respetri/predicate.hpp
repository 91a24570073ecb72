#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace respetri {

enum class Cmp : std::uint8_t { Lt, Le, Eq, Ge, Gt };

constexpr bool compare(std::int64_t lhs, Cmp cmp, std::int64_t rhs) noexcept {
  switch (cmp) {
    case Cmp::Lt: return lhs < rhs;
    case Cmp::Le: return lhs <= rhs;
    case Cmp::Eq: return lhs == rhs;
    case Cmp::Ge: return lhs >= rhs;
    case Cmp::Gt: return lhs > rhs;
  }
  return false;
}

std::string_view to_string(Cmp cmp) noexcept;

/// Boolean expression over marking observables.
///
/// Atoms are `tokens(place) cmp k`, `counter(transition) cmp k` and
/// `mode = m`; they combine with NOT and n-ary AND / OR. A predicate is a
/// plain value and refers to net elements by identifier; it is resolved
/// against a particular net when compiled (see Net::compile).
struct Predicate {
  enum class Kind : std::uint8_t { Const, Tokens, Counter, Mode, Not, And, Or };

  Kind kind = Kind::Const;
  std::string ref;  // place, transition or mode identifier for atoms
  Cmp cmp = Cmp::Ge;
  std::int64_t value = 1;  // comparison constant; for Const, 0 or 1
  std::vector<Predicate> children;

  static Predicate constant(bool v);
  static Predicate tokens(std::string place, Cmp cmp, std::int64_t k);
  static Predicate counter(std::string transition, Cmp cmp, std::int64_t k);
  static Predicate mode(std::string mode_id);
  static Predicate negate(Predicate p);
  static Predicate all(std::vector<Predicate> ps);
  static Predicate any(std::vector<Predicate> ps);

  bool is_atom() const noexcept {
    return kind == Kind::Tokens || kind == Kind::Counter || kind == Kind::Mode;
  }

  friend bool operator==(const Predicate&, const Predicate&) = default;
};

/// Syntactic, sound upward-closure test: NOT-free, and every token or
/// counter atom compares with >= or >. Mode atoms count as upward closed
/// because a mode is one token in its mode place.
bool is_upward_closed(const Predicate& p);

bool mentions_counters_or_modes(const Predicate& p);

/// Canonical surface syntax, e.g. `p1 >= 3 and not #t2 > 2`.
std::string to_string(const Predicate& p);

/// Calls `fn(kind, ref)` for every atom.
template <typename Fn>
void for_each_atom(const Predicate& p, Fn&& fn) {
  if (p.is_atom()) {
    fn(p.kind, p.ref);
    return;
  }
  for (const auto& c : p.children) for_each_atom(c, fn);
}

}  // namespace respetri
