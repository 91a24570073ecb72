#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "respetri/dsl.hpp"
#include "respetri/predicate.hpp"

namespace respetri::detail {

struct Token {
  enum class Kind { Ident, Int, String, Counter, Op, End };

  Kind kind = Kind::End;
  std::string text;  // identifier, operator spelling, or unescaped string
  std::int64_t number = 0;
  SourcePosition position;
};

/// Splits one line into tokens, appending an End token. Lexical problems are
/// reported into `errors`.
std::vector<Token> tokenize_line(std::string_view line, std::size_t line_no,
                                 std::vector<ParseError>& errors,
                                 bool line_comments = true);

/// Recursive-descent reader over one tokenized line.
class LineParser {
 public:
  LineParser(const std::vector<Token>& tokens, std::vector<ParseError>& errors)
      : tokens_(tokens), errors_(errors) {}

  const Token& peek(std::size_t ahead = 0) const;
  const Token& next();
  bool at_end() const { return peek().kind == Token::Kind::End; }
  bool at_keyword(std::string_view kw) const;
  bool at_op(std::string_view op) const;

  /// Each `expect_*` reports a ParseError and returns false (or an empty
  /// value) on mismatch.
  bool expect_keyword(std::string_view kw);
  bool expect_op(std::string_view op);
  std::optional<std::string> expect_ident(std::string_view what);
  std::optional<std::int64_t> expect_nonnegative(std::string_view what);
  std::optional<std::string> expect_string(std::string_view what);
  std::optional<Cmp> expect_cmp();
  bool expect_end();

  /// predicate := or-expr consuming up to the end of the line.
  std::optional<Predicate> predicate();

  void error(const Token& at, std::string message, std::vector<std::string> expected = {});
  bool failed() const { return failed_; }

 private:
  std::optional<Predicate> or_expr();
  std::optional<Predicate> and_expr();
  std::optional<Predicate> unary();
  std::optional<Predicate> primary();

  const std::vector<Token>& tokens_;
  std::vector<ParseError>& errors_;
  std::size_t pos_ = 0;
  bool failed_ = false;
};

std::string describe(const Token& t);

/// Parses declarations without expanding macros or validating.
ModelDraft parse_draft(std::string_view text, std::vector<ParseError>& errors);

/// Canonical `place ...` and `trans ...` declaration lines, without newline.
std::string place_line(const PlaceDef& p);
std::string transition_line(const TransitionDef& t);

}  // namespace respetri::detail
