#include "mrcner/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "mrcner/errors.hpp"
#include "mrcner/version.hpp"

namespace mrcner {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config

TrainConfig TrainConfig::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ValidationError("config must be a JSON object");
  TrainConfig cfg;
  static const std::set<std::string> known = {
      "seed",         "epochs",       "batch_size",        "learning_rate",
      "alpha",        "beta",         "gamma",             "match_threshold",
      "encoder",      "train_path",   "eval_path",         "catalog_path",
      "tags",         "tokenizer",    "output_dir",        "subsample_fraction",
      "flat_mode"};
  for (const auto& [key, value] : doc.items()) {
    (void)value;
    if (!known.count(key)) throw ValidationError("config has unknown key '" + key + "'");
  }
  auto get = [&doc](const char* key, auto& into) {
    if (doc.contains(key)) into = doc[key].get<std::decay_t<decltype(into)>>();
  };
  get("seed", cfg.seed);
  get("epochs", cfg.epochs);
  get("batch_size", cfg.batch_size);
  get("learning_rate", cfg.learning_rate);
  get("alpha", cfg.alpha);
  get("beta", cfg.beta);
  get("gamma", cfg.gamma);
  get("match_threshold", cfg.match_threshold);
  get("train_path", cfg.train_path);
  get("eval_path", cfg.eval_path);
  get("catalog_path", cfg.catalog_path);
  get("tags", cfg.tags);
  get("tokenizer", cfg.tokenizer);
  get("output_dir", cfg.output_dir);
  get("subsample_fraction", cfg.subsample_fraction);
  get("flat_mode", cfg.flat_mode);
  if (doc.contains("encoder")) {
    const auto& enc = doc["encoder"];
    static const std::set<std::string> enc_known = {"kind",        "dim",
                                                    "layers",      "query_slots",
                                                    "max_seq_len", "vocab_path"};
    for (const auto& [key, value] : enc.items()) {
      (void)value;
      if (!enc_known.count(key))
        throw ValidationError("encoder config has unknown key '" + key + "'");
    }
    auto gete = [&enc](const char* key, auto& into) {
      if (enc.contains(key)) into = enc[key].get<std::decay_t<decltype(into)>>();
    };
    gete("kind", cfg.encoder.kind);
    gete("dim", cfg.encoder.dim);
    gete("layers", cfg.encoder.layers);
    gete("query_slots", cfg.encoder.query_slots);
    gete("max_seq_len", cfg.encoder.max_seq_len);
    gete("vocab_path", cfg.encoder.vocab_path);
  }
  return cfg;
}

TrainConfig TrainConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config is not valid JSON: " + path + ": " + e.what());
  }
  return from_json(doc);
}

nlohmann::json TrainConfig::to_json() const {
  nlohmann::json enc{{"kind", encoder.kind},
                     {"dim", encoder.dim},
                     {"layers", encoder.layers},
                     {"query_slots", encoder.query_slots},
                     {"max_seq_len", encoder.max_seq_len},
                     {"vocab_path", encoder.vocab_path}};
  return nlohmann::json{{"seed", seed},
                        {"epochs", epochs},
                        {"batch_size", batch_size},
                        {"learning_rate", learning_rate},
                        {"alpha", alpha},
                        {"beta", beta},
                        {"gamma", gamma},
                        {"match_threshold", match_threshold},
                        {"encoder", enc},
                        {"train_path", train_path},
                        {"eval_path", eval_path},
                        {"catalog_path", catalog_path},
                        {"tags", tags},
                        {"tokenizer", tokenizer},
                        {"output_dir", output_dir},
                        {"subsample_fraction", subsample_fraction},
                        {"flat_mode", flat_mode}};
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be > 0");
  for (double w : {alpha, beta, gamma})
    if (w < 0.0 || w > 1.0)
      throw ValidationError("loss weights must lie in [0, 1]");
  if (match_threshold < 0.0 || match_threshold > 1.0)
    throw ValidationError("match_threshold must lie in [0, 1]");
  if (!(subsample_fraction > 0.0) || subsample_fraction > 1.0)
    throw ValidationError("subsample_fraction must lie in (0, 1]");
  if (tags.empty()) throw ValidationError("config must declare a non-empty tag list");
  if (tokenizer != "whitespace" && tokenizer != "char")
    throw ValidationError("unknown tokenizer: " + tokenizer);
  if (encoder.kind != "toy")
    throw ValidationError("unknown encoder kind '" + encoder.kind +
                          "' (only the bundled toy encoder ships here)");
  if (encoder.dim < 1 || encoder.layers < 1 || encoder.query_slots < 0 ||
      encoder.max_seq_len < 8)
    throw ValidationError("encoder: dim/layers must be >= 1, query_slots >= 0, "
                          "max_seq_len >= 8");
}

std::string TrainConfig::config_hash_hex() const {
  const std::string text = to_json().dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json doc;
  doc["version"] = version;
  doc["config_hash"] = config_hash;
  doc["epochs"] = nlohmann::json::array();
  for (const auto& e : epochs)
    doc["epochs"].push_back({{"l_start", e.start_term},
                             {"l_end", e.end_term},
                             {"l_span", e.span_term},
                             {"total", e.total}});
  if (final_eval) doc["final_eval"] = per_type_eval_to_json(*final_eval);
  doc["wall_seconds"] = wall_seconds;
  return doc;
}

std::string resolve_output_dir(const std::string& output_dir) {
  if (output_dir.empty()) return output_dir;
  const char* root = std::getenv("MRCNER_ROOT");
  fs::path p(output_dir);
  if (root && *root && p.is_relative()) return (fs::path(root) / p).string();
  return output_dir;
}

namespace {

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw ExecError("cannot write file: " + tmp);
    out << content;
    if (!out) throw ExecError("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw ExecError("cannot rename into place: " + path);
}

Vocabulary build_vocab(const std::vector<Sentence>& sentences, const QueryCatalog& catalog,
                       const TagSet& tags, const Tokenizer& tokenizer) {
  std::vector<std::string> tokens;
  for (const auto& s : sentences)
    tokens.insert(tokens.end(), s.tokens.begin(), s.tokens.end());
  for (const auto& t : tags.types()) {
    auto q = tokenizer(lookup_query(catalog, t).text);
    tokens.insert(tokens.end(), q.begin(), q.end());
  }
  return Vocabulary::from_tokens(tokens);
}

std::vector<Sentence> load_corpus(const std::string& path, const TagSet& tags) {
  if (path.size() >= 6 && path.substr(path.size() - 6) == ".jsonl")
    return read_span_jsonl(path, tags);
  return read_conll(path);
}

void check_tags(const Checkpoint& ckpt, const TagSet& tags, bool allow_mismatch) {
  if (allow_mismatch) return;
  std::set<std::string> a(ckpt.tag_names.begin(), ckpt.tag_names.end());
  std::set<std::string> b;
  for (const auto& t : tags.types()) b.insert(t.name);
  if (a != b)
    throw ValidationError(
        "tag set mismatch between checkpoint and catalog (use the zero-shot "
        "path to query a different tag set)");
}

}  // namespace

MrcExample make_example(const Sentence& sentence, const EntityType& type,
                        const QueryCatalog& catalog, const Tokenizer& tokenizer) {
  MrcExample e;
  e.sentence_id = sentence.id;
  e.entity_type = type;
  e.query_tokens = tokenizer(lookup_query(catalog, type).text);
  e.context_tokens = sentence.tokens;
  for (const auto& span : sentence.spans)
    if (span.entity_type.name == type.name) e.answers.emplace_back(span.start, span.end);
  std::sort(e.answers.begin(), e.answers.end());
  return e;
}

// ---------------------------------------------------------------------------
// Training

Checkpoint train_model(const TrainConfig& cfg, const std::vector<Sentence>& sentences,
                       const QueryCatalog& catalog, const TagSet& tags,
                       RunManifest* manifest) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  auto diagnostics = validate_catalog(catalog, tags);
  if (!diagnostics.empty()) {
    std::string msg = "catalog does not cover the tag set:";
    for (const auto& d : diagnostics) msg += " " + d + ";";
    throw ValidationError(msg);
  }
  if (sentences.empty()) throw ValidationError("training corpus is empty");

  const Tokenizer tokenizer = make_tokenizer(cfg.tokenizer);
  std::vector<Sentence> corpus = cfg.subsample_fraction < 1.0
                                     ? subsample_training(sentences, cfg.subsample_fraction, cfg.seed)
                                     : sentences;

  Vocabulary vocab = cfg.encoder.vocab_path.empty()
                         ? build_vocab(corpus, catalog, tags, tokenizer)
                         : Vocabulary::load(cfg.encoder.vocab_path);

  const ToyEncoderConfig enc_cfg = cfg.encoder.toy_config();
  ModelParams params = init_params(vocab.size(), enc_cfg, cfg.seed);
  const LossWeights weights{cfg.alpha, cfg.beta, cfg.gamma};

  std::vector<MrcExample> examples = build_triples(corpus, tags, catalog, tokenizer);
  std::vector<LabelTensors> gold;
  std::vector<EncoderInput> inputs;
  gold.reserve(examples.size());
  inputs.reserve(examples.size());
  for (const auto& e : examples) {
    gold.push_back(make_label_tensors(e));
    inputs.push_back(make_encoder_input(vocab, e.query_tokens, e.context_tokens, enc_cfg));
  }

  std::mt19937_64 shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<EpochStats> epoch_log;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    EpochStats stats;
    for (std::size_t pos = 0; pos < order.size(); pos += cfg.batch_size) {
      const std::size_t batch_end = std::min(pos + cfg.batch_size, order.size());
      const double inv = 1.0 / double(batch_end - pos);
      ModelGrads batch_grads = zero_grads(params);
      for (std::size_t b = pos; b < batch_end; ++b) {
        const std::size_t idx = order[b];
        ModelForward fwd = run_model(params, enc_cfg, inputs[idx], &gold[idx]);
        LossBreakdown loss = compute_loss(fwd.probs, gold[idx], weights);
        if (!std::isfinite(loss.total))
          throw ExecError("non-finite loss at epoch " + std::to_string(epoch + 1) +
                          ", example " + examples[idx].sentence_id + "/" +
                          examples[idx].entity_type.name);
        stats.start_term += loss.start_term;
        stats.end_term += loss.end_term;
        stats.span_term += loss.span_term;
        stats.total += loss.total;
        ModelGrads g = loss_gradients(params, enc_cfg, fwd, gold[idx], weights);
        accumulate_grads(batch_grads, g, inv);
      }
      sgd_step(params, batch_grads, cfg.learning_rate);
    }
    const double inv_n = 1.0 / double(examples.size());
    stats.start_term *= inv_n;
    stats.end_term *= inv_n;
    stats.span_term *= inv_n;
    stats.total *= inv_n;
    epoch_log.push_back(stats);
  }

  Checkpoint ckpt;
  ckpt.version = kVersion;
  ckpt.encoder_kind = cfg.encoder.kind;
  ckpt.enc_cfg = enc_cfg;
  ckpt.vocab = std::move(vocab);
  for (const auto& t : tags.types()) ckpt.tag_names.push_back(t.name);
  ckpt.tokenizer_kind = cfg.tokenizer;
  ckpt.match_threshold = cfg.match_threshold;
  ckpt.config_hash_hex = cfg.config_hash_hex();
  ckpt.params = std::move(params);

  if (manifest) {
    manifest->version = kVersion;
    manifest->config_hash = ckpt.config_hash_hex;
    manifest->epochs = std::move(epoch_log);
    manifest->wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  return ckpt;
}

Checkpoint train(const TrainConfig& cfg, RunManifest* manifest) {
  cfg.validate();
  if (cfg.train_path.empty()) throw ValidationError("config must set train_path");
  if (cfg.catalog_path.empty()) throw ValidationError("config must set catalog_path");
  const TagSet tags(cfg.tags);
  const QueryCatalog catalog = QueryCatalog::load(cfg.catalog_path);
  const std::vector<Sentence> sentences = load_corpus(cfg.train_path, tags);

  RunManifest local;
  RunManifest* mf = manifest ? manifest : &local;
  Checkpoint ckpt = train_model(cfg, sentences, catalog, tags, mf);

  if (!cfg.eval_path.empty()) {
    const auto gold = load_corpus(cfg.eval_path, tags);
    DecodeConfig decode{cfg.match_threshold, cfg.flat_mode};
    mf->final_eval = evaluate(ckpt, gold, catalog, tags, decode);
  }

  const std::string out_dir = resolve_output_dir(cfg.output_dir);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    save_checkpoint(ckpt, (fs::path(out_dir) / "checkpoint.bin").string());
    write_text_atomic((fs::path(out_dir) / "manifest.json").string(),
                      mf->to_json().dump(2) + "\n");
  }
  return ckpt;
}

// ---------------------------------------------------------------------------
// Prediction / evaluation

std::vector<Sentence> predict(const Checkpoint& ckpt, const std::vector<Sentence>& inputs,
                              const QueryCatalog& catalog, const TagSet& tags,
                              const DecodeConfig& decode, bool allow_tag_mismatch) {
  check_tags(ckpt, tags, allow_tag_mismatch);
  auto diagnostics = validate_catalog(catalog, tags);
  if (!diagnostics.empty())
    throw ValidationError("catalog does not cover the tag set: " + diagnostics.front());

  const Tokenizer tokenizer = make_tokenizer(ckpt.tokenizer_kind);
  std::vector<Sentence> out;
  out.reserve(inputs.size());
  for (const auto& sentence : inputs) {
    std::map<std::string, ProbOutputs> per_type;
    for (const auto& type : tags.types()) {
      const auto query = tokenizer(lookup_query(catalog, type).text);
      const auto input = make_encoder_input(ckpt.vocab, query, sentence.tokens, ckpt.enc_cfg);
      ModelForward fwd = run_model(ckpt.params, ckpt.enc_cfg, input, nullptr);
      per_type[type.name] = std::move(fwd.probs);
    }
    Sentence pred;
    pred.id = sentence.id;
    pred.tokens = sentence.tokens;
    pred.spans = decode_sentence(per_type, tags, decode);
    out.push_back(std::move(pred));
  }
  return out;
}

PerTypeEval evaluate(const Checkpoint& ckpt, const std::vector<Sentence>& gold,
                     const QueryCatalog& catalog, const TagSet& tags,
                     const DecodeConfig& decode, bool allow_tag_mismatch) {
  const auto pred = predict(ckpt, gold, catalog, tags, decode, allow_tag_mismatch);
  return micro_prf_per_type(gold, pred);
}

ZeroShotReport zero_shot_eval(const Checkpoint& ckpt, const std::vector<Sentence>& target,
                              const QueryCatalog& target_catalog, const TagSet& target_tags,
                              const LabelMapping& mapping, const DecodeConfig& decode) {
  auto diagnostics = validate_catalog(target_catalog, target_tags);
  if (!diagnostics.empty())
    throw ValidationError("target catalog does not cover the target tag set: " +
                          diagnostics.front());

  ZeroShotReport report;
  report.eval = evaluate(ckpt, target, target_catalog, target_tags, decode,
                         /*allow_tag_mismatch=*/true);

  long stp = 0, sfp = 0, sfn = 0, utp = 0, ufp = 0, ufn = 0;
  for (const auto& type : target_tags.types()) {
    auto it = report.eval.per_type.find(type.name);
    if (it == report.eval.per_type.end()) continue;
    const EvalResult& r = it->second;
    if (mapping.maps_to(type.name)) {
      stp += r.tp;
      sfp += r.fp;
      sfn += r.fn;
    } else {
      utp += r.tp;
      ufp += r.fp;
      ufn += r.fn;
    }
  }
  report.seen = make_eval_result(stp, sfp, sfn);
  report.unseen = make_eval_result(utp, ufp, ufn);
  return report;
}

std::vector<AblationRow> query_ablation_run(const TrainConfig& base_cfg,
                                            const std::vector<Sentence>& train_sentences,
                                            const std::vector<Sentence>& eval_sentences,
                                            const TagSet& tags,
                                            const std::vector<QueryStrategy>& strategies,
                                            const std::map<QueryStrategy, QueryCatalog>& catalogs) {
  std::vector<AblationRow> rows;
  for (QueryStrategy strategy : strategies) {
    QueryCatalog catalog;
    auto it = catalogs.find(strategy);
    if (it != catalogs.end()) {
      catalog = it->second;
    } else if (strategy == QueryStrategy::PositionIndex) {
      catalog = QueryCatalog("generated", QueryStrategy::PositionIndex, {});
    } else {
      throw ValidationError("no catalog provided for strategy " + to_string(strategy));
    }
    Checkpoint ckpt = train_model(base_cfg, train_sentences, catalog, tags);
    DecodeConfig decode{base_cfg.match_threshold, base_cfg.flat_mode};
    rows.push_back(AblationRow{strategy, evaluate(ckpt, eval_sentences, catalog, tags, decode)});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Heat-map export

void export_heatmap(const Checkpoint& ckpt, const MrcExample& example,
                    const std::string& out_dir) {
  fs::create_directories(out_dir);
  const auto input =
      make_encoder_input(ckpt.vocab, example.query_tokens, example.context_tokens, ckpt.enc_cfg);
  const int n = input.context_len;

  std::set<std::pair<int, int>> all_pairs;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) all_pairs.emplace(i, j);
  ModelForward fwd = run_model_with_candidates(ckpt.params, ckpt.enc_cfg, input, all_pairs);

  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12f", v);
    return std::string(buf);
  };

  auto write_column = [&](const std::string& name, const Matrix& p) {
    std::ofstream out(fs::path(out_dir) / name);
    if (!out) throw ExecError("cannot write " + name);
    for (int i = 0; i < n; ++i) out << fmt(p(i, 1)) << "\n";
  };
  write_column("p_start.csv", fwd.probs.p_start);
  write_column("p_end.csv", fwd.probs.p_end);

  std::ofstream out(fs::path(out_dir) / "p_match.csv");
  if (!out) throw ExecError("cannot write p_match.csv");
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j) out << ",";
      if (j >= i) out << fmt(fwd.probs.p_match.at({i, j}));
    }
    out << "\n";
  }
}

}  // namespace mrcner
