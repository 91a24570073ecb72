#include "lexer.hpp"

#include <cctype>
#include <limits>

namespace respetri::detail {

namespace {

bool ident_start(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x80 && (std::isalpha(u) || u == '_');
}

bool ident_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x80 && (std::isalnum(u) || u == '_');
}

}  // namespace

std::vector<Token> tokenize_line(std::string_view line, std::size_t line_no,
                                 std::vector<ParseError>& errors, bool line_comments) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto pos = [&](std::size_t col) { return SourcePosition{line_no, col + 1}; };

  while (i < line.size()) {
    const char c = line[i];
    if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (c == '#') {
      if (i + 1 < line.size() && ident_start(line[i + 1])) {
        // Counter reference, unless the `#` opens the line.
        bool line_start = line_comments;
        for (std::size_t k = 0; k < i; ++k)
          if (line[k] != ' ' && line[k] != '\t') line_start = false;
        if (!line_start) {
          ++i;
          while (i < line.size() && ident_char(line[i])) ++i;
          out.push_back({Token::Kind::Counter, std::string(line.substr(start + 1, i - start - 1)), 0, pos(start)});
          continue;
        }
      }
      break;  // comment
    }
    if (ident_start(c)) {
      while (i < line.size() && ident_char(line[i])) ++i;
      out.push_back({Token::Kind::Ident, std::string(line.substr(start, i - start)), 0, pos(start)});
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '-' && i + 1 < line.size() && std::isdigit(static_cast<unsigned char>(line[i + 1])))) {
      const bool negative = c == '-';
      if (negative) ++i;
      std::int64_t value = 0;
      bool overflow = false;
      while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) {
        const int digit = line[i] - '0';
        if (value > (std::numeric_limits<std::int32_t>::max() - digit) / 10) overflow = true;
        if (!overflow) value = value * 10 + digit;
        ++i;
      }
      if (i < line.size() && ident_char(line[i])) {
        while (i < line.size() && ident_char(line[i])) ++i;
        errors.push_back({pos(start), "malformed number '" + std::string(line.substr(start, i - start)) + "'", {"integer"}});
        continue;
      }
      if (overflow) {
        errors.push_back({pos(start), "integer out of range", {"integer"}});
        value = 0;
      }
      out.push_back({Token::Kind::Int, std::string(line.substr(start, i - start)), negative ? -value : value, pos(start)});
      continue;
    }
    if (c == '"') {
      std::string text;
      ++i;
      bool closed = false;
      while (i < line.size()) {
        if (line[i] == '\\' && i + 1 < line.size()) {
          const char e = line[i + 1];
          text += e == 'n' ? '\n' : e == 't' ? '\t' : e;
          i += 2;
          continue;
        }
        if (line[i] == '"') {
          closed = true;
          ++i;
          break;
        }
        text += line[i++];
      }
      if (!closed) {
        errors.push_back({pos(start), "unterminated string", {"\""}});
        break;
      }
      out.push_back({Token::Kind::String, std::move(text), 0, pos(start)});
      continue;
    }
    static constexpr std::string_view two_char[] = {":=", "<=", ">=", "==", "!="};
    bool matched = false;
    for (auto op : two_char) {
      if (line.substr(i, 2) == op) {
        out.push_back({Token::Kind::Op, std::string(op), 0, pos(start)});
        i += 2;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (std::string_view(":<>=(),").find(c) != std::string_view::npos) {
      out.push_back({Token::Kind::Op, std::string(1, c), 0, pos(start)});
      ++i;
      continue;
    }
    errors.push_back({pos(start), "unexpected character '" + std::string(1, c) + "'", {}});
    ++i;
  }
  out.push_back({Token::Kind::End, "", 0, pos(line.size())});
  return out;
}

std::string describe(const Token& t) {
  switch (t.kind) {
    case Token::Kind::End: return "end of line";
    case Token::Kind::String: return "string \"" + t.text + "\"";
    case Token::Kind::Counter: return "'#" + t.text + "'";
    default: return "'" + t.text + "'";
  }
}

const Token& LineParser::peek(std::size_t ahead) const {
  const std::size_t i = std::min(pos_ + ahead, tokens_.size() - 1);
  return tokens_[i];
}

const Token& LineParser::next() {
  const Token& t = tokens_[pos_];
  if (pos_ + 1 < tokens_.size()) ++pos_;
  return t;
}

bool LineParser::at_keyword(std::string_view kw) const {
  return peek().kind == Token::Kind::Ident && peek().text == kw;
}

bool LineParser::at_op(std::string_view op) const {
  return peek().kind == Token::Kind::Op && peek().text == op;
}

void LineParser::error(const Token& at, std::string message, std::vector<std::string> expected) {
  if (failed_) return;  // one error per line
  failed_ = true;
  errors_.push_back({at.position, std::move(message), std::move(expected)});
}

bool LineParser::expect_keyword(std::string_view kw) {
  if (at_keyword(kw)) {
    next();
    return true;
  }
  error(peek(), "expected '" + std::string(kw) + "', found " + describe(peek()), {std::string(kw)});
  return false;
}

bool LineParser::expect_op(std::string_view op) {
  if (at_op(op)) {
    next();
    return true;
  }
  error(peek(), "expected '" + std::string(op) + "', found " + describe(peek()), {std::string(op)});
  return false;
}

std::optional<std::string> LineParser::expect_ident(std::string_view what) {
  if (peek().kind == Token::Kind::Ident) return next().text;
  error(peek(), "expected " + std::string(what) + ", found " + describe(peek()), {"identifier"});
  return std::nullopt;
}

std::optional<std::int64_t> LineParser::expect_nonnegative(std::string_view what) {
  const Token& t = peek();
  if (t.kind != Token::Kind::Int) {
    error(t, "expected " + std::string(what) + ", found " + describe(t), {"integer"});
    return std::nullopt;
  }
  if (t.number < 0) {
    error(t, std::string(what) + " must be nonnegative, found " + t.text, {"nonnegative integer"});
    return std::nullopt;
  }
  next();
  return t.number;
}

std::optional<std::string> LineParser::expect_string(std::string_view what) {
  if (peek().kind == Token::Kind::String) return next().text;
  error(peek(), "expected " + std::string(what) + ", found " + describe(peek()), {"string"});
  return std::nullopt;
}

std::optional<Cmp> LineParser::expect_cmp() {
  const Token& t = peek();
  if (t.kind == Token::Kind::Op) {
    std::optional<Cmp> cmp;
    if (t.text == "<") cmp = Cmp::Lt;
    else if (t.text == "<=") cmp = Cmp::Le;
    else if (t.text == "=" || t.text == "==") cmp = Cmp::Eq;
    else if (t.text == ">=") cmp = Cmp::Ge;
    else if (t.text == ">") cmp = Cmp::Gt;
    if (cmp) {
      next();
      return cmp;
    }
  }
  error(t, "expected comparison, found " + describe(t), {"<", "<=", "=", ">=", ">"});
  return std::nullopt;
}

bool LineParser::expect_end() {
  if (at_end()) return true;
  error(peek(), "unexpected " + describe(peek()), {"end of line"});
  return false;
}

std::optional<Predicate> LineParser::predicate() {
  auto p = or_expr();
  if (p && !expect_end()) return std::nullopt;
  return p;
}

std::optional<Predicate> LineParser::or_expr() {
  std::vector<Predicate> parts;
  auto first = and_expr();
  if (!first) return std::nullopt;
  parts.push_back(std::move(*first));
  while (at_keyword("or")) {
    next();
    auto rhs = and_expr();
    if (!rhs) return std::nullopt;
    parts.push_back(std::move(*rhs));
  }
  return Predicate::any(std::move(parts));
}

std::optional<Predicate> LineParser::and_expr() {
  std::vector<Predicate> parts;
  auto first = unary();
  if (!first) return std::nullopt;
  parts.push_back(std::move(*first));
  while (at_keyword("and")) {
    next();
    auto rhs = unary();
    if (!rhs) return std::nullopt;
    parts.push_back(std::move(*rhs));
  }
  return Predicate::all(std::move(parts));
}

std::optional<Predicate> LineParser::unary() {
  if (at_keyword("not")) {
    next();
    auto inner = unary();
    if (!inner) return std::nullopt;
    return Predicate::negate(std::move(*inner));
  }
  return primary();
}

std::optional<Predicate> LineParser::primary() {
  const Token& t = peek();
  if (at_op("(")) {
    next();
    auto inner = or_expr();
    if (!inner || !expect_op(")")) return std::nullopt;
    return inner;
  }
  if (t.kind == Token::Kind::Ident) {
    if (t.text == "true" || t.text == "false") {
      next();
      return Predicate::constant(t.text == "true");
    }
    if (t.text == "mode") {
      next();
      if (!at_op("=") && !at_op("==")) {
        error(peek(), "expected '=' after 'mode', found " + describe(peek()), {"="});
        return std::nullopt;
      }
      next();
      auto id = expect_ident("mode identifier");
      if (!id) return std::nullopt;
      return Predicate::mode(std::move(*id));
    }
    if (t.text == "and" || t.text == "or") {
      error(t, "expected atom, found " + describe(t), {"place", "#transition", "mode", "("});
      return std::nullopt;
    }
    const std::string place = next().text;
    auto cmp = expect_cmp();
    if (!cmp) return std::nullopt;
    auto k = expect_nonnegative("constant");
    if (!k) return std::nullopt;
    return Predicate::tokens(place, *cmp, *k);
  }
  if (t.kind == Token::Kind::Counter) {
    const std::string transition = next().text;
    auto cmp = expect_cmp();
    if (!cmp) return std::nullopt;
    auto k = expect_nonnegative("constant");
    if (!k) return std::nullopt;
    return Predicate::counter(transition, *cmp, *k);
  }
  error(t, "expected atom, found " + describe(t), {"place", "#transition", "mode", "("});
  return std::nullopt;
}

}  // namespace respetri::detail
