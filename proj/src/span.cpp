#include "mrcner/span.hpp"

#include <algorithm>
#include <tuple>
#include <unordered_set>

#include "mrcner/errors.hpp"

namespace mrcner {

TagSet::TagSet(const std::vector<std::string>& names) {
  if (names.empty()) throw ValidationError("tag set must not be empty");
  std::unordered_set<std::string> seen;
  types_.reserve(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i].empty()) throw ValidationError("tag name must not be empty");
    if (!seen.insert(names[i]).second)
      throw ValidationError("duplicate tag name: " + names[i]);
    types_.push_back(EntityType{names[i], static_cast<int>(i)});
  }
}

const EntityType& TagSet::at(std::size_t index) const {
  if (index >= types_.size()) throw ValidationError("tag index out of range");
  return types_[index];
}

const EntityType* TagSet::find(const std::string& name) const {
  for (const auto& t : types_)
    if (t.name == name) return &t;
  return nullptr;
}

bool span_less(const EntitySpan& a, const EntitySpan& b) {
  return std::tie(a.start, a.end, a.entity_type.index, a.entity_type.name) <
         std::tie(b.start, b.end, b.entity_type.index, b.entity_type.name);
}

bool spans_overlap(const EntitySpan& a, const EntitySpan& b) {
  return a.start <= b.end && b.start <= a.end;
}

bool is_nested(const EntitySpan& outer, const EntitySpan& inner) {
  if (outer.start == inner.start && outer.end == inner.end) return false;
  return outer.start <= inner.start && inner.end <= outer.end;
}

std::vector<EntitySpan> resolve_flat_conflicts(const std::vector<EntitySpan>& spans) {
  for (const auto& s : spans)
    if (!s.score)
      throw ValidationError("resolve_flat_conflicts requires scored spans");

  std::vector<EntitySpan> order(spans);
  std::stable_sort(order.begin(), order.end(), [](const EntitySpan& a, const EntitySpan& b) {
    if (*a.score != *b.score) return *a.score > *b.score;
    return std::tie(a.start, a.end, a.entity_type.index) <
           std::tie(b.start, b.end, b.entity_type.index);
  });

  std::vector<EntitySpan> kept;
  for (const auto& s : order) {
    bool clash = std::any_of(kept.begin(), kept.end(),
                             [&](const EntitySpan& k) { return spans_overlap(k, s); });
    if (!clash) kept.push_back(s);
  }
  std::sort(kept.begin(), kept.end(), span_less);
  return kept;
}

}  // namespace mrcner
