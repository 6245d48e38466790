#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mrcner/matrix.hpp"
#include "mrcner/model.hpp"
#include "mrcner/span.hpp"

namespace mrcner {

struct DecodeConfig {
  double match_threshold = 0.5;
  bool flat_mode = false;  // apply resolve_flat_conflicts last
};

// Row-argmax boundary sets: position i is a start iff row i of p_start
// picks class 1. An exact tie resolves to class 0 (not a boundary).
std::pair<std::set<int>, std::set<int>> extract_boundary_indexes(const Matrix& p_start,
                                                                 const Matrix& p_end);

// Emits (i, j, type) with score p_match(i, j) for every candidate pair
// above the threshold. A start may match several ends and vice versa;
// that is what carries nesting. Throws ValidationError when a candidate
// pair has no p_match entry.
std::vector<EntitySpan> match_and_emit(const std::set<int>& starts,
                                       const std::set<int>& ends,
                                       const std::map<std::pair<int, int>, double>& p_match,
                                       const DecodeConfig& config,
                                       const EntityType& type);

// Union of per-type emissions, sorted by (start, end, type index).
// Overlaps within and across types are preserved unless flat_mode is on.
std::vector<EntitySpan> decode_sentence(const std::map<std::string, ProbOutputs>& per_type,
                                        const TagSet& tags, const DecodeConfig& config);

// Independent oracle: enumerate every (i, j) with i <= j and keep the pair
// when row-argmax marks i a start, j an end, and p_match clears the
// threshold. Must equal match_and_emit on the same inputs.
std::vector<EntitySpan> brute_force_decode(const Matrix& p_start, const Matrix& p_end,
                                           const std::map<std::pair<int, int>, double>& p_match,
                                           const DecodeConfig& config,
                                           const EntityType& type);

}  // namespace mrcner
