#include "mrcner/eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <tuple>

#include "mrcner/errors.hpp"

namespace mrcner {

EvalResult make_eval_result(long tp, long fp, long fn) {
  EvalResult r;
  r.tp = tp;
  r.fp = fp;
  r.fn = fn;
  r.precision = (tp + fp) > 0 ? double(tp) / double(tp + fp) : 0.0;
  r.recall = (tp + fn) > 0 ? double(tp) / double(tp + fn) : 0.0;
  r.f1 = (r.precision + r.recall) > 0.0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  return r;
}

LabelMapping LabelMapping::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open label mapping file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("label mapping is not valid JSON: " + path + ": " + e.what());
  }
  if (!doc.is_object()) throw ValidationError("label mapping must be a JSON object");
  LabelMapping m;
  std::set<std::string> targets;
  for (const auto& [src, dst] : doc.items()) {
    if (!dst.is_string()) throw ValidationError("label mapping values must be strings");
    const std::string t = dst.get<std::string>();
    if (!targets.insert(t).second)
      throw ValidationError("label mapping is not injective: target '" + t + "' repeats");
    m.source_to_target[src] = t;
  }
  return m;
}

bool LabelMapping::maps_to(const std::string& target_name) const {
  for (const auto& [src, dst] : source_to_target) {
    (void)src;
    if (dst == target_name) return true;
  }
  return false;
}

namespace {

// (sentence id, start, end, type name)
using SpanKey = std::tuple<std::string, int, int, std::string>;

std::set<SpanKey> span_keys(const std::vector<Sentence>& sentences) {
  std::set<SpanKey> keys;
  for (const auto& s : sentences)
    for (const auto& span : s.spans)
      keys.emplace(s.id, span.start, span.end, span.entity_type.name);
  return keys;
}

void check_id_alignment(const std::vector<Sentence>& gold, const std::vector<Sentence>& pred) {
  std::set<std::string> gids, pids;
  for (const auto& s : gold) gids.insert(s.id);
  for (const auto& s : pred) pids.insert(s.id);
  if (gids != pids)
    throw ValidationError("gold and prediction sentence id sets differ (" +
                          std::to_string(gids.size()) + " vs " +
                          std::to_string(pids.size()) + " distinct ids)");
}

}  // namespace

EvalResult micro_prf(const std::vector<Sentence>& gold, const std::vector<Sentence>& pred) {
  check_id_alignment(gold, pred);
  const auto g = span_keys(gold);
  const auto p = span_keys(pred);
  long tp = 0;
  for (const auto& key : p) tp += g.count(key);
  return make_eval_result(tp, static_cast<long>(p.size()) - tp,
                          static_cast<long>(g.size()) - tp);
}

PerTypeEval micro_prf_per_type(const std::vector<Sentence>& gold,
                               const std::vector<Sentence>& pred) {
  check_id_alignment(gold, pred);
  const auto g = span_keys(gold);
  const auto p = span_keys(pred);

  std::map<std::string, std::array<long, 3>> counts;  // type -> {tp, fp, fn}
  for (const auto& key : p) {
    auto& c = counts[std::get<3>(key)];
    if (g.count(key)) ++c[0];
    else ++c[1];
  }
  for (const auto& key : g)
    if (!p.count(key)) ++counts[std::get<3>(key)][2];

  PerTypeEval out;
  long tp = 0, fp = 0, fn = 0;
  for (const auto& [type, c] : counts) {
    out.per_type[type] = make_eval_result(c[0], c[1], c[2]);
    tp += c[0];
    fp += c[1];
    fn += c[2];
  }
  out.overall = make_eval_result(tp, fp, fn);
  return out;
}

std::vector<Sentence> subsample_training(const std::vector<Sentence>& sentences,
                                         double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0) || fraction > 1.0)
    throw ValidationError("subsample fraction must be in (0, 1], got " +
                          std::to_string(fraction));
  const std::size_t n = sentences.size();
  const std::size_t take = static_cast<std::size_t>(std::ceil(fraction * double(n)));

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  std::vector<std::size_t> chosen(perm.begin(), perm.begin() + std::min(take, n));
  std::sort(chosen.begin(), chosen.end());
  std::vector<Sentence> out;
  out.reserve(chosen.size());
  for (std::size_t idx : chosen) out.push_back(sentences[idx]);
  return out;
}

nlohmann::json eval_result_to_json(const EvalResult& r) {
  return nlohmann::json{{"tp", r.tp},
                        {"fp", r.fp},
                        {"fn", r.fn},
                        {"precision", r.precision},
                        {"recall", r.recall},
                        {"f1", r.f1}};
}

nlohmann::json per_type_eval_to_json(const PerTypeEval& e) {
  nlohmann::json doc = eval_result_to_json(e.overall);
  doc["per_type"] = nlohmann::json::object();
  for (const auto& [name, r] : e.per_type) doc["per_type"][name] = eval_result_to_json(r);
  return doc;
}

}  // namespace mrcner
