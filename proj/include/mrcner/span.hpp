#pragma once

#include <optional>
#include <string>
#include <vector>

namespace mrcner {

// One entity label. `index` is the 0-based position within the owning
// TagSet; it doubles as the tie-break order during decoding.
struct EntityType {
  std::string name;
  int index = 0;

  bool operator==(const EntityType&) const = default;
};

// Ordered list of entity types. Names unique, indexes contiguous from 0;
// both are enforced at construction.
class TagSet {
 public:
  TagSet() = default;
  explicit TagSet(const std::vector<std::string>& names);

  const std::vector<EntityType>& types() const { return types_; }
  std::size_t size() const { return types_.size(); }
  const EntityType& at(std::size_t index) const;
  const EntityType* find(const std::string& name) const;
  bool contains(const std::string& name) const { return find(name) != nullptr; }

 private:
  std::vector<EntityType> types_;
};

// A typed token interval with INCLUSIVE end. Overlapping and nested spans
// are legal everywhere; only resolve_flat_conflicts removes overlap, and
// only when asked.
struct EntitySpan {
  int start = 0;
  int end = 0;  // inclusive
  EntityType entity_type;
  std::optional<double> score;

  bool operator==(const EntitySpan&) const = default;
};

// Canonical order: (start, end, type index, type name). Score ignored.
bool span_less(const EntitySpan& a, const EntitySpan& b);

// True iff the closed intervals [a.start,a.end] and [b.start,b.end] intersect.
bool spans_overlap(const EntitySpan& a, const EntitySpan& b);

// True iff `inner` lies fully inside `outer` and the intervals differ.
// Identical intervals of different types are two distinct spans, not a
// nesting.
bool is_nested(const EntitySpan& outer, const EntitySpan& inner);

// Greedy non-overlap filter for flat-NER output: keep spans by descending
// score, ties broken by (start, end, type index). Throws ValidationError
// when any span lacks a score.
std::vector<EntitySpan> resolve_flat_conflicts(const std::vector<EntitySpan>& spans);

}  // namespace mrcner
