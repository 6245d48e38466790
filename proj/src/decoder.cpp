#include "mrcner/decoder.hpp"

#include <algorithm>

#include "mrcner/errors.hpp"

namespace mrcner {

std::pair<std::set<int>, std::set<int>> extract_boundary_indexes(const Matrix& p_start,
                                                                 const Matrix& p_end) {
  std::set<int> starts, ends;
  for (std::size_t i = 0; i < p_start.rows(); ++i)
    if (p_start(i, 1) > p_start(i, 0)) starts.insert(static_cast<int>(i));
  for (std::size_t j = 0; j < p_end.rows(); ++j)
    if (p_end(j, 1) > p_end(j, 0)) ends.insert(static_cast<int>(j));
  return {starts, ends};
}

std::vector<EntitySpan> match_and_emit(const std::set<int>& starts,
                                       const std::set<int>& ends,
                                       const std::map<std::pair<int, int>, double>& p_match,
                                       const DecodeConfig& config,
                                       const EntityType& type) {
  std::vector<EntitySpan> spans;
  for (int i : starts) {
    for (int j : ends) {
      if (i > j) continue;
      auto it = p_match.find({i, j});
      if (it == p_match.end())
        throw ValidationError("no match probability for candidate pair (" +
                              std::to_string(i) + "," + std::to_string(j) + ")");
      if (it->second > config.match_threshold)
        spans.push_back(EntitySpan{i, j, type, it->second});
    }
  }
  std::sort(spans.begin(), spans.end(), span_less);
  return spans;
}

std::vector<EntitySpan> decode_sentence(const std::map<std::string, ProbOutputs>& per_type,
                                        const TagSet& tags, const DecodeConfig& config) {
  std::vector<EntitySpan> all;
  for (const auto& type : tags.types()) {
    auto it = per_type.find(type.name);
    if (it == per_type.end())
      throw ValidationError("decode_sentence: no outputs for type " + type.name);
    const ProbOutputs& probs = it->second;
    auto [starts, ends] = extract_boundary_indexes(probs.p_start, probs.p_end);
    auto spans = match_and_emit(starts, ends, probs.p_match, config, type);
    all.insert(all.end(), spans.begin(), spans.end());
  }
  if (config.flat_mode) all = resolve_flat_conflicts(all);
  std::sort(all.begin(), all.end(), span_less);
  return all;
}

std::vector<EntitySpan> brute_force_decode(const Matrix& p_start, const Matrix& p_end,
                                           const std::map<std::pair<int, int>, double>& p_match,
                                           const DecodeConfig& config,
                                           const EntityType& type) {
  const int n = static_cast<int>(p_start.rows());
  std::vector<EntitySpan> spans;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      if (!(p_start(i, 1) > p_start(i, 0))) continue;
      if (!(p_end(j, 1) > p_end(j, 0))) continue;
      auto it = p_match.find({i, j});
      if (it == p_match.end())
        throw ValidationError("brute_force_decode: p_match missing pair (" +
                              std::to_string(i) + "," + std::to_string(j) + ")");
      if (it->second > config.match_threshold)
        spans.push_back(EntitySpan{i, j, type, it->second});
    }
  }
  std::sort(spans.begin(), spans.end(), span_less);
  return spans;
}

}  // namespace mrcner
