#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrcner/dataset.hpp"
#include "mrcner/decoder.hpp"
#include "mrcner/eval.hpp"
#include "mrcner/model.hpp"
#include "mrcner/query.hpp"

namespace mrcner {

struct EncoderChoice {
  std::string kind = "toy";
  int dim = 24;
  int layers = 1;
  int query_slots = 4;
  int max_seq_len = 512;
  std::string vocab_path;  // empty: build the vocabulary from corpus + catalog

  ToyEncoderConfig toy_config() const {
    return ToyEncoderConfig{dim, layers, query_slots, max_seq_len};
  }
};

struct TrainConfig {
  std::uint64_t seed = 1;
  int epochs = 20;
  int batch_size = 8;
  double learning_rate = 0.5;
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
  double match_threshold = 0.5;
  EncoderChoice encoder;
  std::string train_path;
  std::string eval_path;  // optional: evaluated after the last epoch
  std::string catalog_path;
  std::vector<std::string> tags;
  std::string tokenizer = "whitespace";
  std::string output_dir;  // empty: nothing is written
  double subsample_fraction = 1.0;
  bool flat_mode = false;

  static TrainConfig from_json(const nlohmann::json& doc);
  static TrainConfig from_json_file(const std::string& path);
  nlohmann::json to_json() const;
  void validate() const;
  // FNV-1a over the canonical JSON dump.
  std::string config_hash_hex() const;
};

struct EpochStats {
  double start_term = 0.0;
  double end_term = 0.0;
  double span_term = 0.0;
  double total = 0.0;
};

struct RunManifest {
  std::string version;
  std::string config_hash;
  std::vector<EpochStats> epochs;
  std::optional<PerTypeEval> final_eval;
  double wall_seconds = 0.0;

  nlohmann::json to_json() const;
};

// If MRCNER_ROOT is set, relative output directories land under it.
std::string resolve_output_dir(const std::string& output_dir);

// Joint training of the boundary heads, the matching head and the encoder
// on the triple grid built from `sentences`. Deterministic for a fixed
// (seed, config, data). Aborts with ExecError on a non-finite loss.
Checkpoint train_model(const TrainConfig& cfg, const std::vector<Sentence>& sentences,
                       const QueryCatalog& catalog, const TagSet& tags,
                       RunManifest* manifest = nullptr);

// File-driven variant: loads corpus and catalog from cfg paths, trains,
// then writes checkpoint.bin and manifest.json into output_dir
// (write-then-rename).
Checkpoint train(const TrainConfig& cfg, RunManifest* manifest = nullptr);

// One output sentence per input, carrying the decoded spans with scores.
// The catalog tag set must match the checkpoint's unless
// allow_tag_mismatch (the zero-shot path) is set.
std::vector<Sentence> predict(const Checkpoint& ckpt, const std::vector<Sentence>& inputs,
                              const QueryCatalog& catalog, const TagSet& tags,
                              const DecodeConfig& decode, bool allow_tag_mismatch = false);

PerTypeEval evaluate(const Checkpoint& ckpt, const std::vector<Sentence>& gold,
                     const QueryCatalog& catalog, const TagSet& tags,
                     const DecodeConfig& decode, bool allow_tag_mismatch = false);

// Query the trained model with target-type questions directly, no
// retraining. Scoring runs in target label space; the mapping only labels
// which target types count as seen for the breakdown.
struct ZeroShotReport {
  PerTypeEval eval;
  EvalResult seen;
  EvalResult unseen;
};

ZeroShotReport zero_shot_eval(const Checkpoint& ckpt, const std::vector<Sentence>& target,
                              const QueryCatalog& target_catalog, const TagSet& target_tags,
                              const LabelMapping& mapping, const DecodeConfig& decode);

// Trains one model per strategy under identical config and seed and
// evaluates each. PositionIndex needs no catalog file; every other
// strategy must appear in `catalogs`.
struct AblationRow {
  QueryStrategy strategy;
  PerTypeEval eval;
};

std::vector<AblationRow> query_ablation_run(const TrainConfig& base_cfg,
                                            const std::vector<Sentence>& train_sentences,
                                            const std::vector<Sentence>& eval_sentences,
                                            const TagSet& tags,
                                            const std::vector<QueryStrategy>& strategies,
                                            const std::map<QueryStrategy, QueryCatalog>& catalogs);

// Numeric export for one example: p_start.csv and p_end.csv hold the
// class-1 column, p_match.csv the full candidate grid with blank cells
// below the diagonal.
void export_heatmap(const Checkpoint& ckpt, const MrcExample& example,
                    const std::string& out_dir);

MrcExample make_example(const Sentence& sentence, const EntityType& type,
                        const QueryCatalog& catalog, const Tokenizer& tokenizer);

}  // namespace mrcner
