#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrcner/dataset.hpp"
#include "mrcner/span.hpp"

namespace mrcner {

// Micro-averaged span-level counts with derived ratios. Ratios are 0 when
// their denominator is 0.
struct EvalResult {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

EvalResult make_eval_result(long tp, long fp, long fn);

struct PerTypeEval {
  EvalResult overall;
  std::map<std::string, EvalResult> per_type;
};

// Source-tagset name -> target-tagset name, injective on its domain. Only
// used for seen/unseen reporting; scoring happens entirely in target label
// space.
struct LabelMapping {
  std::map<std::string, std::string> source_to_target;

  static LabelMapping load(const std::string& path);
  bool maps_to(const std::string& target_name) const;
};

// Exact-match scoring: a prediction is a TP iff gold holds the identical
// (start, end, type) for the same sentence. Duplicates count once. Counts
// are pooled over the corpus before the ratios. Gold and prediction must
// cover the same sentence ids.
EvalResult micro_prf(const std::vector<Sentence>& gold, const std::vector<Sentence>& pred);
PerTypeEval micro_prf_per_type(const std::vector<Sentence>& gold,
                               const std::vector<Sentence>& pred);

// Deterministic subset of ceil(fraction * N) whole sentences, drawn as a
// prefix of one seeded shuffle so smaller fractions are nested inside
// larger ones. Output keeps the original corpus order.
std::vector<Sentence> subsample_training(const std::vector<Sentence>& sentences,
                                         double fraction, std::uint64_t seed);

nlohmann::json eval_result_to_json(const EvalResult& r);
nlohmann::json per_type_eval_to_json(const PerTypeEval& e);

}  // namespace mrcner
