#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "respetri/errors.hpp"
#include "respetri/net.hpp"

namespace respetri {

// Textual model format (`.net`). Line oriented; `#` followed by a space or
// at the start of a line begins a comment.
//
//   meta <key> "<value>"
//   place <id> [init <n>] [cap <n>] [label "<text>"]
//   trans <id> [in|out|read|inhibit <place>[:<n>]]... [counted] [label "<text>"] [guard <pred>]
//   forbidden <name> := <pred>
//   audit <name> := counter <t> > <n>
//   audit <name> := rate <t> max <k> per <w>
//   audit <name> := occupancy <place> <cmp> <n>
//   audit <name> := pressure <forbidden-name> <= <d>
//   mode <id> [initial] [disable <t>]...
//   mode <id> override <t> := <pred>
//   ratelimit <t> max <k> per <w>
//
// Predicates: `p >= 2`, `#t > 3`, `mode = m`, `true`, `false`, combined
// with `not`, `and`, `or` and parentheses.

struct ModelSource {
  std::string text;
  std::string origin = "<memory>";
};

struct SourcePosition {
  std::size_t line = 1;
  std::size_t column = 1;

  friend auto operator<=>(const SourcePosition&, const SourcePosition&) = default;
};

struct ParseError {
  SourcePosition position;
  std::string message;
  std::vector<std::string> expected;
};

/// `origin:line:column: message`.
std::string format_error(const ModelSource& src, const ParseError& e);

struct RateLimit {
  std::string transition;
  std::int64_t max_count = 1;
  std::int64_t window = 1;
  SourcePosition position;
};

/// A parsed model before macro expansion.
struct ModelDraft {
  NetModel net;
  std::vector<RateLimit> rate_limits;
  std::optional<std::string> initial_mode;
};

class MacroError : public Error {
 public:
  enum class Kind { MacroArity, UnknownTransitionInMacro };
  MacroError(Kind kind, const std::string& message) : Error(message), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Expands rate limits and mode blocks into places and arcs, and compiles
/// equal-weight input/output self-loops into read arcs. Idempotent; never
/// renames declared identifiers. Throws MacroError.
NetModel expand_macros(ModelDraft draft);

struct ParseResult {
  std::optional<NetModel> model;
  std::vector<ParseError> parse_errors;
  std::vector<StructureError> structure_errors;

  bool ok() const noexcept { return model.has_value(); }
};

/// Parses, expands and validates. On success `model` is set and both error
/// lists are empty.
ParseResult parse_model(const ModelSource& src);

/// Reads `path` and parses it; an unreadable file yields one ParseError at 1:1.
ParseResult parse_model_file(const std::filesystem::path& path);

/// Canonical text: meta, places, transitions, forbidden, audit, modes; each
/// block sorted by identifier. Byte-identical for structurally equal models.
ModelSource serialize_model(const NetModel& model);

class PredicateSyntaxError : public Error {
 public:
  explicit PredicateSyntaxError(ParseError e)
      : Error(e.message + " at column " + std::to_string(e.position.column)), error_(std::move(e)) {}
  const ParseError& error() const noexcept { return error_; }

 private:
  ParseError error_;
};

/// Parses a standalone predicate; throws PredicateSyntaxError.
Predicate parse_predicate(std::string_view text);

/// Quotes and escapes a label or metadata value.
std::string quote(std::string_view s);

}  // namespace respetri
