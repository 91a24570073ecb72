#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "respetri/net.hpp"

namespace respetri::detail {

struct CompiledPredicateNode {
  Predicate::Kind kind = Predicate::Kind::Const;
  std::uint32_t index = 0;  // place index, or counter slot for Counter atoms
  Cmp cmp = Cmp::Ge;
  std::int64_t value = 0;
  std::vector<CompiledPredicateNode> children;
};

struct IndexedArc {
  PlaceIndex place;
  Tokens weight;
};

struct CompiledTransition {
  std::vector<IndexedArc> inputs;
  std::vector<IndexedArc> outputs;
  std::vector<IndexedArc> inhibitors;
  std::vector<IndexedArc> reads;
  std::optional<CompiledPredicate> guard;
  // One entry per mode (in mode order); empty when the net has no overrides
  // for this transition.
  std::vector<std::optional<CompiledPredicate>> mode_guards;
  std::optional<std::size_t> counter_slot;
  // Net effect per touched place, sorted by place.
  std::vector<std::pair<PlaceIndex, std::int64_t>> delta;
};

struct NetData {
  NetModel model;
  std::vector<std::string> place_ids;
  std::vector<std::string> transition_ids;
  std::unordered_map<std::string, PlaceIndex> place_index;
  std::unordered_map<std::string, TransitionIndex> transition_index;
  std::vector<std::optional<Tokens>> capacity;
  std::vector<CompiledTransition> transitions;
  std::vector<TransitionIndex> counter_owner;
  std::vector<std::string> mode_ids;
  std::vector<PlaceIndex> mode_places;
  bool monotone = true;
};

CompiledPredicate compile_predicate(const NetData& data, const Predicate& p);

/// Applies the firing of `t` without checking that it is enabled.
Marking fire_unchecked(const NetData& data, const Marking& m, TransitionIndex t);

}  // namespace respetri::detail
