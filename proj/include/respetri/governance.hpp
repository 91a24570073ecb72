#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "respetri/analysis.hpp"
#include "respetri/dsl.hpp"
#include "respetri/errors.hpp"
#include "respetri/net.hpp"

namespace respetri {

struct AddPlace {
  PlaceDef place;
};
struct RemovePlace {
  std::string id;
};
struct AddTransition {
  TransitionDef transition;
};
struct RemoveTransition {
  std::string id;
};
struct AddArc {
  std::string transition;
  ArcRole role = ArcRole::Input;
  Arc arc;
};
struct RemoveArc {
  std::string transition;
  ArcRole role = ArcRole::Input;
  std::string place;
};
/// Replaces a transition's guard; nullopt clears it.
struct SetGuard {
  std::string transition;
  std::optional<Predicate> guard;
};
/// nullopt removes the capacity.
struct SetCapacity {
  std::string place;
  std::optional<Tokens> capacity;
};
struct AddForbidden {
  std::string name;
  Predicate predicate;
};
struct RemoveForbidden {
  std::string name;
};
/// Relabels a place or transition.
struct SetLabel {
  std::string id;
  std::string label;
};
/// Moves the mode token to `mode`.
struct SwitchMode {
  std::string mode;
};

using EditOp = std::variant<AddPlace, RemovePlace, AddTransition, RemoveTransition, AddArc, RemoveArc, SetGuard,
                            SetCapacity, AddForbidden, RemoveForbidden, SetLabel, SwitchMode>;

struct Patch {
  std::vector<EditOp> ops;
  std::string author;
  std::string rationale;

  /// SHA-256 (hex) of the canonical text of `ops`.
  std::string id() const;
};

/// Canonical text of the ops alone, one per line.
std::string ops_text(const Patch& patch);
/// Full patch file text, author and rationale first.
std::string serialize_patch(const Patch& patch);

class PatchSyntaxError : public Error {
 public:
  explicit PatchSyntaxError(std::vector<ParseError> errors);
  const std::vector<ParseError>& errors() const noexcept { return errors_; }

 private:
  std::vector<ParseError> errors_;
};

/// Parses the `.patch` format:
///
///   author "<name>"
///   rationale "<text>"
///   add place <id> [init <n>] [cap <n>] [label "<text>"]
///   remove place <id>
///   add trans <id> [arcs...] [counted] [label "<text>"] [guard <pred>]
///   remove trans <id>
///   add arc <trans> in|out|read|inhibit <place>[:<n>]
///   remove arc <trans> in|out|read|inhibit <place>
///   set guard <trans> := <pred>
///   clear guard <trans>
///   set cap <place> <n>
///   clear cap <place>
///   add forbidden <name> := <pred>
///   remove forbidden <name>
///   set label <id> "<text>"
///   switch mode <mode>
///
/// Throws PatchSyntaxError.
Patch parse_patch(const ModelSource& src);
Patch parse_patch_file(const std::filesystem::path& path);

class DanglingReference : public Error {
 public:
  using Error::Error;
};
class UnknownTarget : public Error {
 public:
  using Error::Error;
};
class ResultingModelInvalid : public Error {
 public:
  explicit ResultingModelInvalid(std::vector<StructureError> errors);
  const std::vector<StructureError>& errors() const noexcept { return errors_; }

 private:
  std::vector<StructureError> errors_;
};

/// Applies every op to a copy of `model`; all or nothing. Throws
/// DanglingReference, UnknownTarget or ResultingModelInvalid.
NetModel apply_patch(const NetModel& model, const Patch& patch);

struct PredicateComparison {
  std::string name;
  std::optional<Verdict> before;  // absent when the patch adds the predicate
  std::optional<Verdict> after;   // absent when the patch removes it
  bool regression = false;        // Safe before, Unsafe or Unknown after

  bool added() const noexcept { return !before; }
  bool removed() const noexcept { return !after; }
};

struct VerificationReport {
  std::string patch_id;
  std::vector<PredicateComparison> predicates;
  std::size_t states_before = 0;
  std::size_t states_after = 0;
  bool truncated_before = false;
  bool truncated_after = false;
  ExplorationBound bound;

  bool forbidden_set_changed() const;
  bool any_regression() const;
  /// Safe before and Unsafe after for some predicate.
  bool safe_to_unsafe() const;
};

VerificationReport verify_patch(const NetModel& model, const Patch& patch, const ExplorationBound& bound = {},
                                unsigned workers = 1);

/// SHA-256 (hex) of the canonical serialization.
std::string model_hash(const NetModel& model);

struct LogEntry {
  std::string timestamp;
  std::string patch_id;
  std::string author;
  std::string rationale;
  std::string pre_hash;
  std::string post_hash;
  std::string patch_text;
  std::map<std::string, std::string> verdicts;  // predicate -> "before -> after"

  friend bool operator==(const LogEntry&, const LogEntry&) = default;
};

class HashChainBroken : public Error {
 public:
  using Error::Error;
};

/// Append-only sequence of governance decisions, persisted as one JSON
/// object per line.
class GovernanceLog {
 public:
  GovernanceLog() = default;

  const std::vector<LogEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  /// Throws HashChainBroken when `entry.pre_hash` does not continue the chain.
  void append(LogEntry entry);
  /// Index of the first entry that breaks the chain, if any.
  std::optional<std::size_t> first_break() const;

  std::string to_jsonl() const;
  static GovernanceLog from_jsonl(std::string_view text);
  /// A missing file yields an empty log.
  static GovernanceLog load(const std::filesystem::path& path);
  /// Appends the entries beyond those already on disk.
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<LogEntry> entries_;
};

/// Appends an entry for `patch`; throws HashChainBroken when the log's last
/// post-hash differs from the hash of `pre`.
GovernanceLog record_decision(GovernanceLog log, const NetModel& pre, const NetModel& post, const Patch& patch,
                              const VerificationReport& report, std::string timestamp = {});

/// Re-applies every logged patch from `genesis`, checking both hashes of
/// each entry. Throws HashChainBroken.
NetModel replay(const NetModel& genesis, const GovernanceLog& log);

/// UTC timestamp in ISO 8601 form.
std::string utc_timestamp();

}  // namespace respetri
