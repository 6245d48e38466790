#include "mrcner/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>

#include <json.hpp>

#include "mrcner/decoder.hpp"
#include "mrcner/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace mrcner {

namespace {
constexpr double kCosEps = 1e-12;
constexpr double kNormGuard = 1e-8;
}  // namespace

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary() {
  tokens_ = {"<unk>", "<cls>", "<sep>"};
  for (int i = 0; i < 3; ++i) index_[tokens_[i]] = i;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
  Vocabulary v;
  for (const auto& tok : tokens) {
    if (tok.empty()) continue;
    if (v.index_.count(tok)) continue;
    v.index_[tok] = static_cast<int>(v.tokens_.size());
    v.tokens_.push_back(tok);
  }
  return v;
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open vocabulary file: " + path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) tokens.push_back(line);
  }
  return from_tokens(tokens);
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ExecError("cannot write vocabulary file: " + path);
  for (std::size_t i = 3; i < tokens_.size(); ++i) out << tokens_[i] << "\n";
}

int Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

std::vector<int> Vocabulary::ids(const std::vector<std::string>& tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

// ---------------------------------------------------------------------------
// Parameters

namespace {

Matrix uniform_matrix(std::size_t rows, std::size_t cols, double scale,
                      std::mt19937_64& rng) {
  Matrix m(rows, cols);
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (auto& v : m.data()) v = dist(rng);
  return m;
}

}  // namespace

ModelParams init_params(int vocab_size, const ToyEncoderConfig& cfg, std::uint64_t seed) {
  if (cfg.dim < 1 || cfg.layers < 1 || cfg.query_slots < 0)
    throw ValidationError("encoder config: dim and layers must be >= 1, query_slots >= 0");
  std::mt19937_64 rng(seed);
  const int d = cfg.dim;
  const int fw = cfg.feature_width();

  ModelParams p;
  p.emb = uniform_matrix(vocab_size, d, 1.0 / std::sqrt(double(d)), rng);
  for (int l = 0; l < cfg.layers; ++l) {
    p.mix_w.push_back(uniform_matrix(d, fw, 1.0 / std::sqrt(double(fw)), rng));
    p.mix_b.emplace_back(d, 0.0);
  }
  p.heads.t_start = uniform_matrix(d, 2, 1.0 / std::sqrt(double(d)), rng);
  p.heads.t_end = uniform_matrix(d, 2, 1.0 / std::sqrt(double(d)), rng);
  const double ms = 1.0 / std::sqrt(double(2 * d));
  std::uniform_real_distribution<double> dist(-ms, ms);
  p.heads.match_weights.resize(2 * d);
  for (auto& v : p.heads.match_weights) v = dist(rng);
  return p;
}

ModelGrads zero_grads(const ModelParams& params) {
  ModelGrads g;
  g.emb = Matrix(params.emb.rows(), params.emb.cols());
  for (const auto& w : params.mix_w) g.mix_w.emplace_back(w.rows(), w.cols());
  for (const auto& b : params.mix_b) g.mix_b.emplace_back(b.size(), 0.0);
  g.t_start = Matrix(params.heads.t_start.rows(), params.heads.t_start.cols());
  g.t_end = Matrix(params.heads.t_end.rows(), params.heads.t_end.cols());
  g.match_w.assign(params.heads.match_weights.size(), 0.0);
  return g;
}

void accumulate_grads(ModelGrads& into, const ModelGrads& g, double scale) {
  auto add = [scale](std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += scale * b[i];
  };
  add(into.emb.data(), g.emb.data());
  for (std::size_t l = 0; l < into.mix_w.size(); ++l) {
    add(into.mix_w[l].data(), g.mix_w[l].data());
    add(into.mix_b[l], g.mix_b[l]);
  }
  add(into.t_start.data(), g.t_start.data());
  add(into.t_end.data(), g.t_end.data());
  add(into.match_w, g.match_w);
}

void sgd_step(ModelParams& params, const ModelGrads& grads, double learning_rate) {
  auto step = [learning_rate](std::vector<double>& p, const std::vector<double>& g) {
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= learning_rate * g[i];
  };
  step(params.emb.data(), grads.emb.data());
  for (std::size_t l = 0; l < params.mix_w.size(); ++l) {
    step(params.mix_w[l].data(), grads.mix_w[l].data());
    step(params.mix_b[l], grads.mix_b[l]);
  }
  step(params.heads.t_start.data(), grads.t_start.data());
  step(params.heads.t_end.data(), grads.t_end.data());
  step(params.heads.match_weights, grads.match_w);
}

void for_each_param(ModelParams& params, const std::function<void(double&)>& fn) {
  for (auto& v : params.emb.data()) fn(v);
  for (auto& w : params.mix_w)
    for (auto& v : w.data()) fn(v);
  for (auto& b : params.mix_b)
    for (auto& v : b) fn(v);
  for (auto& v : params.heads.t_start.data()) fn(v);
  for (auto& v : params.heads.t_end.data()) fn(v);
  for (auto& v : params.heads.match_weights) fn(v);
}

void for_each_grad(const ModelGrads& grads, const std::function<void(double)>& fn) {
  for (const auto& v : grads.emb.data()) fn(v);
  for (const auto& w : grads.mix_w)
    for (const auto& v : w.data()) fn(v);
  for (const auto& b : grads.mix_b)
    for (const auto& v : b) fn(v);
  for (const auto& v : grads.t_start.data()) fn(v);
  for (const auto& v : grads.t_end.data()) fn(v);
  for (const auto& v : grads.match_w) fn(v);
}

// ---------------------------------------------------------------------------
// Toy encoder

EncoderInput make_encoder_input(const Vocabulary& vocab,
                                const std::vector<std::string>& query_tokens,
                                const std::vector<std::string>& context_tokens,
                                const ToyEncoderConfig& cfg) {
  if (context_tokens.empty()) throw ValidationError("context must not be empty");
  if (query_tokens.empty()) throw ValidationError("query must not be empty");
  const int m = static_cast<int>(query_tokens.size());
  const int n = static_cast<int>(context_tokens.size());
  const int total = 2 + m + n;
  if (total > cfg.max_seq_len)
    throw ValidationError("combined sequence length " + std::to_string(total) +
                          " exceeds encoder maximum " + std::to_string(cfg.max_seq_len));
  EncoderInput in;
  in.combined_ids.reserve(total);
  in.combined_ids.push_back(Vocabulary::kCls);
  for (const auto& t : query_tokens) in.combined_ids.push_back(vocab.id(t));
  in.combined_ids.push_back(Vocabulary::kSep);
  for (const auto& t : context_tokens) in.combined_ids.push_back(vocab.id(t));
  in.query_begin = 1;
  in.query_len = m;
  in.context_begin = m + 2;
  in.context_len = n;
  return in;
}

namespace {

double l2_norm(const double* v, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) s += v[i] * v[i];
  return std::sqrt(s);
}

// Feature layout per position: [h_i, h_{i-1}, h_{i+1}, qbar, slots_i].
void build_features(const Matrix& h, int i, const std::vector<double>& qbar,
                    const Matrix& slots, std::vector<double>& f) {
  const int d = static_cast<int>(h.cols());
  const int n = static_cast<int>(h.rows());
  const int k = static_cast<int>(slots.cols());
  std::fill(f.begin(), f.end(), 0.0);
  std::copy(h.row(i), h.row(i) + d, f.begin());
  if (i > 0) std::copy(h.row(i - 1), h.row(i - 1) + d, f.begin() + d);
  if (i + 1 < n) std::copy(h.row(i + 1), h.row(i + 1) + d, f.begin() + 2 * d);
  std::copy(qbar.begin(), qbar.end(), f.begin() + 3 * d);
  for (int s = 0; s < k; ++s) f[4 * d + s] = slots(i, s);
}

}  // namespace

EncoderForward toy_forward(const ModelParams& params, const ToyEncoderConfig& cfg,
                           const EncoderInput& input) {
  const int d = cfg.dim;
  const int n = input.context_len;
  const int m = input.query_len;
  const int K = cfg.query_slots;

  EncoderForward fwd;
  fwd.input = input;

  fwd.qbar.assign(d, 0.0);
  for (int j = 0; j < m; ++j) {
    const double* q = params.emb.row(input.combined_ids[input.query_begin + j]);
    for (int t = 0; t < d; ++t) fwd.qbar[t] += q[t] / m;
  }

  fwd.slots = Matrix(n, K);
  for (int i = 0; i < n; ++i) {
    const double* x = params.emb.row(input.combined_ids[input.context_begin + i]);
    const double a = l2_norm(x, d);
    for (int k = 0; k < std::min(m, K); ++k) {
      const double* q = params.emb.row(input.combined_ids[input.query_begin + k]);
      const double b = l2_norm(q, d);
      fwd.slots(i, k) = dot(x, q, d) / (a * b + kCosEps);
    }
  }

  Matrix h0(n, d);
  for (int i = 0; i < n; ++i) {
    const double* x = params.emb.row(input.combined_ids[input.context_begin + i]);
    std::copy(x, x + d, h0.row(i));
  }
  fwd.h.push_back(std::move(h0));

  std::vector<double> f(cfg.feature_width());
  for (int l = 0; l < cfg.layers; ++l) {
    const Matrix& prev = fwd.h.back();
    Matrix next(n, d);
    for (int i = 0; i < n; ++i) {
      build_features(prev, i, fwd.qbar, fwd.slots, f);
      for (int k = 0; k < d; ++k) {
        double z = params.mix_b[l][k] + dot(params.mix_w[l].row(k), f.data(), f.size());
        next(i, k) = std::tanh(z);
      }
    }
    fwd.h.push_back(std::move(next));
  }
  return fwd;
}

ReprMatrix toy_encode(const ModelParams& params, const ToyEncoderConfig& cfg,
                      const EncoderInput& input) {
  return toy_forward(params, cfg, input).repr();
}

void toy_backward(const ModelParams& params, const ToyEncoderConfig& cfg,
                  const EncoderForward& fwd, const Matrix& d_repr, ModelGrads& grads) {
  const int d = cfg.dim;
  const int n = fwd.input.context_len;
  const int m = fwd.input.query_len;
  const int K = cfg.query_slots;
  const int fw = cfg.feature_width();

  Matrix dh = d_repr;
  std::vector<double> dqbar(d, 0.0);
  Matrix dslots(n, K);

  std::vector<double> f(fw), dz(d), df(fw);
  for (int l = cfg.layers - 1; l >= 0; --l) {
    const Matrix& prev = fwd.h[l];
    const Matrix& out = fwd.h[l + 1];
    Matrix dprev(n, d);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < d; ++k) {
        const double hk = out(i, k);
        dz[k] = dh(i, k) * (1.0 - hk * hk);
        grads.mix_b[l][k] += dz[k];
      }
      build_features(prev, i, fwd.qbar, fwd.slots, f);
      for (int k = 0; k < d; ++k) {
        double* wrow = grads.mix_w[l].row(k);
        for (int t = 0; t < fw; ++t) wrow[t] += dz[k] * f[t];
      }
      std::fill(df.begin(), df.end(), 0.0);
      for (int k = 0; k < d; ++k) {
        const double* wrow = params.mix_w[l].row(k);
        for (int t = 0; t < fw; ++t) df[t] += wrow[t] * dz[k];
      }
      for (int t = 0; t < d; ++t) dprev(i, t) += df[t];
      if (i > 0)
        for (int t = 0; t < d; ++t) dprev(i - 1, t) += df[d + t];
      if (i + 1 < n)
        for (int t = 0; t < d; ++t) dprev(i + 1, t) += df[2 * d + t];
      for (int t = 0; t < d; ++t) dqbar[t] += df[3 * d + t];
      for (int s = 0; s < K; ++s) dslots(i, s) += df[4 * d + s];
    }
    dh = std::move(dprev);
  }

  // h[0] rows are the context token embeddings.
  for (int i = 0; i < n; ++i) {
    const int id = fwd.input.combined_ids[fwd.input.context_begin + i];
    for (int t = 0; t < d; ++t) grads.emb(id, t) += dh(i, t);
  }

  for (int j = 0; j < m; ++j) {
    const int id = fwd.input.combined_ids[fwd.input.query_begin + j];
    for (int t = 0; t < d; ++t) grads.emb(id, t) += dqbar[t] / m;
  }

  // Cosine-slot gradients flow into both the context and the query token
  // embedding; identical ids cancel to zero as the math requires.
  for (int i = 0; i < n; ++i) {
    const int xid = fwd.input.combined_ids[fwd.input.context_begin + i];
    const double* x = params.emb.row(xid);
    const double a = l2_norm(x, d);
    for (int k = 0; k < std::min(m, K); ++k) {
      const double g = dslots(i, k);
      if (g == 0.0) continue;
      const int qid = fwd.input.combined_ids[fwd.input.query_begin + k];
      const double* q = params.emb.row(qid);
      const double b = l2_norm(q, d);
      if (a < kNormGuard || b < kNormGuard) continue;
      const double denom = a * b + kCosEps;
      const double s = fwd.slots(i, k);
      for (int t = 0; t < d; ++t) {
        grads.emb(xid, t) += g * (q[t] - s * (b / a) * x[t]) / denom;
        grads.emb(qid, t) += g * (x[t] - s * (a / b) * q[t]) / denom;
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Heads

namespace {

Matrix boundary_head(const ReprMatrix& e, const Matrix& t) {
  if (e.dim() != t.rows() || t.cols() != 2)
    throw ValidationError("boundary head shape mismatch: E is n x " +
                          std::to_string(e.dim()) + ", T is " +
                          std::to_string(t.rows()) + " x " + std::to_string(t.cols()));
  const int n = static_cast<int>(e.n());
  const int d = static_cast<int>(e.dim());
  Matrix p(n, 2);
  for (int i = 0; i < n; ++i) {
    double z0 = 0.0, z1 = 0.0;
    const double* row = e.values.row(i);
    for (int k = 0; k < d; ++k) {
      z0 += row[k] * t(k, 0);
      z1 += row[k] * t(k, 1);
    }
    const double mx = std::max(z0, z1);
    const double e0 = std::exp(z0 - mx), e1 = std::exp(z1 - mx);
    p(i, 0) = e0 / (e0 + e1);
    p(i, 1) = e1 / (e0 + e1);
  }
  return p;
}

}  // namespace

Matrix predict_start(const ReprMatrix& e, const HeadParams& heads) {
  return boundary_head(e, heads.t_start);
}

Matrix predict_end(const ReprMatrix& e, const HeadParams& heads) {
  return boundary_head(e, heads.t_end);
}

double match_probability(const ReprMatrix& e, int i, int j, const HeadParams& heads) {
  const int n = static_cast<int>(e.n());
  const int d = static_cast<int>(e.dim());
  if (i < 0 || j < i || j >= n)
    throw ValidationError("match_probability requires 0 <= i <= j < n, got (" +
                          std::to_string(i) + "," + std::to_string(j) + ") with n=" +
                          std::to_string(n));
  if (heads.match_weights.size() != static_cast<std::size_t>(2 * d))
    throw ValidationError("match weights must have length 2d");
  double u = dot(heads.match_weights.data(), e.values.row(i), d) +
             dot(heads.match_weights.data() + d, e.values.row(j), d);
  return 1.0 / (1.0 + std::exp(-u));
}

std::set<std::pair<int, int>> candidate_pairs(const LabelTensors* gold,
                                              const std::set<int>& pred_starts,
                                              const std::set<int>& pred_ends) {
  std::set<int> starts = pred_starts;
  std::set<int> ends = pred_ends;
  if (gold) {
    for (std::size_t i = 0; i < gold->y_start.size(); ++i)
      if (gold->y_start[i]) starts.insert(static_cast<int>(i));
    for (std::size_t j = 0; j < gold->y_end.size(); ++j)
      if (gold->y_end[j]) ends.insert(static_cast<int>(j));
  }
  std::set<std::pair<int, int>> pairs;
  for (int i : starts)
    for (int j : ends)
      if (i <= j) pairs.emplace(i, j);
  return pairs;
}

// ---------------------------------------------------------------------------
// Loss

LossBreakdown compute_loss(const ProbOutputs& probs, const LabelTensors& gold,
                           const LossWeights& w) {
  const std::size_t n = gold.y_start.size();
  if (probs.p_start.rows() != n || probs.p_end.rows() != n)
    throw ValidationError("probability matrices do not match label length");
  for (const auto& pair : gold.y_match)
    if (!probs.p_match.count(pair))
      throw ValidationError("positive gold pair (" + std::to_string(pair.first) + "," +
                            std::to_string(pair.second) +
                            ") missing from the candidate set");

  LossBreakdown out;
  for (std::size_t i = 0; i < n; ++i) {
    out.start_term -= std::log(probs.p_start(i, gold.y_start[i]));
    out.end_term -= std::log(probs.p_end(i, gold.y_end[i]));
  }
  out.start_term /= double(n);
  out.end_term /= double(n);

  if (!probs.p_match.empty()) {
    for (const auto& [pair, p] : probs.p_match) {
      const bool positive = gold.y_match.count(pair) > 0;
      out.span_term -= positive ? std::log(p) : std::log(1.0 - p);
    }
    out.span_term /= double(probs.p_match.size());
  }

  out.total = w.alpha * out.start_term + w.beta * out.end_term + w.gamma * out.span_term;
  return out;
}

// ---------------------------------------------------------------------------
// Full forward / backward

namespace {

ModelForward finish_forward(const ModelParams& params, EncoderForward enc,
                            const std::set<std::pair<int, int>>& candidates) {
  ModelForward fwd;
  fwd.enc = std::move(enc);
  ReprMatrix e = fwd.enc.repr();
  fwd.probs.p_start = predict_start(e, params.heads);
  fwd.probs.p_end = predict_end(e, params.heads);
  auto [starts, ends] = extract_boundary_indexes(fwd.probs.p_start, fwd.probs.p_end);
  fwd.pred_starts = std::move(starts);
  fwd.pred_ends = std::move(ends);
  for (const auto& pair : candidates)
    fwd.probs.p_match[pair] = match_probability(e, pair.first, pair.second, params.heads);
  return fwd;
}

}  // namespace

ModelForward run_model(const ModelParams& params, const ToyEncoderConfig& cfg,
                       const EncoderInput& input, const LabelTensors* gold) {
  EncoderForward enc = toy_forward(params, cfg, input);
  ReprMatrix e = enc.repr();
  Matrix p_start = predict_start(e, params.heads);
  Matrix p_end = predict_end(e, params.heads);
  auto [starts, ends] = extract_boundary_indexes(p_start, p_end);
  auto candidates = candidate_pairs(gold, starts, ends);

  ModelForward fwd;
  fwd.enc = std::move(enc);
  fwd.probs.p_start = std::move(p_start);
  fwd.probs.p_end = std::move(p_end);
  fwd.pred_starts = std::move(starts);
  fwd.pred_ends = std::move(ends);
  for (const auto& pair : candidates)
    fwd.probs.p_match[pair] = match_probability(e, pair.first, pair.second, params.heads);
  return fwd;
}

ModelForward run_model_with_candidates(const ModelParams& params, const ToyEncoderConfig& cfg,
                                       const EncoderInput& input,
                                       const std::set<std::pair<int, int>>& candidates) {
  return finish_forward(params, toy_forward(params, cfg, input), candidates);
}

ModelGrads loss_gradients(const ModelParams& params, const ToyEncoderConfig& cfg,
                          const ModelForward& fwd, const LabelTensors& gold,
                          const LossWeights& w) {
  ModelGrads grads = zero_grads(params);
  const int n = fwd.enc.input.context_len;
  const int d = cfg.dim;
  const Matrix& e = fwd.enc.h.back();
  Matrix de(n, d);

  // Softmax+CE gradient: d(loss)/d(logit) = p - onehot, averaged over tokens.
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < 2; ++c) {
      const double gs = (w.alpha / n) * (fwd.probs.p_start(i, c) - (gold.y_start[i] == c));
      const double ge = (w.beta / n) * (fwd.probs.p_end(i, c) - (gold.y_end[i] == c));
      for (int k = 0; k < d; ++k) {
        grads.t_start(k, c) += gs * e(i, k);
        grads.t_end(k, c) += ge * e(i, k);
        de(i, k) += gs * params.heads.t_start(k, c) + ge * params.heads.t_end(k, c);
      }
    }
  }

  if (!fwd.probs.p_match.empty()) {
    const double scale = w.gamma / double(fwd.probs.p_match.size());
    for (const auto& [pair, p] : fwd.probs.p_match) {
      const auto [i, j] = pair;
      const double y = gold.y_match.count(pair) ? 1.0 : 0.0;
      const double g = scale * (p - y);
      for (int k = 0; k < d; ++k) {
        grads.match_w[k] += g * e(i, k);
        grads.match_w[d + k] += g * e(j, k);
        de(i, k) += g * params.heads.match_weights[k];
        de(j, k) += g * params.heads.match_weights[d + k];
      }
    }
  }

  toy_backward(params, cfg, fwd.enc, de, grads);
  return grads;
}

// ---------------------------------------------------------------------------
// Checkpoint

namespace {

void write_bytes(std::ofstream& out, const void* data, std::size_t size) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
}

void write_u32(std::ofstream& out, std::uint32_t v) { write_bytes(out, &v, 4); }
void write_u64(std::ofstream& out, std::uint64_t v) { write_bytes(out, &v, 8); }

void write_array(std::ofstream& out, const std::string& name, const std::vector<double>& data) {
  std::uint16_t len = static_cast<std::uint16_t>(name.size());
  write_bytes(out, &len, 2);
  write_bytes(out, name.data(), name.size());
  write_u64(out, data.size());
  write_bytes(out, data.data(), data.size() * sizeof(double));
}

void read_bytes(std::ifstream& in, void* data, std::size_t size) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(size));
  if (!in) throw ValidationError("checkpoint truncated");
}

std::uint32_t read_u32(std::ifstream& in) {
  std::uint32_t v;
  read_bytes(in, &v, 4);
  return v;
}

std::uint64_t read_u64(std::ifstream& in) {
  std::uint64_t v;
  read_bytes(in, &v, 8);
  return v;
}

constexpr char kMagic[8] = {'M', 'R', 'C', 'N', 'E', 'R', '0', '1'};

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  nlohmann::json manifest;
  manifest["version"] = ckpt.version;
  manifest["encoder_kind"] = ckpt.encoder_kind;
  manifest["dim"] = ckpt.enc_cfg.dim;
  manifest["layers"] = ckpt.enc_cfg.layers;
  manifest["query_slots"] = ckpt.enc_cfg.query_slots;
  manifest["max_seq_len"] = ckpt.enc_cfg.max_seq_len;
  manifest["vocab"] = ckpt.vocab.tokens();
  manifest["tags"] = ckpt.tag_names;
  manifest["tokenizer"] = ckpt.tokenizer_kind;
  manifest["match_threshold"] = ckpt.match_threshold;
  manifest["config_hash"] = ckpt.config_hash_hex;
  const std::string mtext = manifest.dump();

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ExecError("cannot write checkpoint: " + tmp);
    write_bytes(out, kMagic, 8);
    write_u32(out, static_cast<std::uint32_t>(mtext.size()));
    write_bytes(out, mtext.data(), mtext.size());

    std::uint32_t count = 3 + 2 * static_cast<std::uint32_t>(ckpt.params.mix_w.size()) + 2;
    write_u32(out, count);
    write_array(out, "emb", ckpt.params.emb.data());
    for (std::size_t l = 0; l < ckpt.params.mix_w.size(); ++l) {
      write_array(out, "mix_w" + std::to_string(l), ckpt.params.mix_w[l].data());
      write_array(out, "mix_b" + std::to_string(l), ckpt.params.mix_b[l]);
    }
    write_array(out, "t_start", ckpt.params.heads.t_start.data());
    write_array(out, "t_end", ckpt.params.heads.t_end.data());
    write_array(out, "match_w", ckpt.params.heads.match_weights);
    if (!out) throw ExecError("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw ExecError("cannot rename checkpoint into place: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint: " + path);
  char magic[8];
  read_bytes(in, magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0)
    throw ValidationError("not a checkpoint file: " + path);

  const std::uint32_t mlen = read_u32(in);
  std::string mtext(mlen, '\0');
  read_bytes(in, mtext.data(), mlen);
  nlohmann::json manifest = nlohmann::json::parse(mtext);

  Checkpoint ckpt;
  ckpt.version = manifest.at("version").get<std::string>();
  ckpt.encoder_kind = manifest.at("encoder_kind").get<std::string>();
  ckpt.enc_cfg.dim = manifest.at("dim").get<int>();
  ckpt.enc_cfg.layers = manifest.at("layers").get<int>();
  ckpt.enc_cfg.query_slots = manifest.at("query_slots").get<int>();
  ckpt.enc_cfg.max_seq_len = manifest.at("max_seq_len").get<int>();
  auto vocab_tokens = manifest.at("vocab").get<std::vector<std::string>>();
  if (vocab_tokens.size() < 3)
    throw ValidationError("checkpoint vocabulary is missing the reserved tokens");
  ckpt.vocab = Vocabulary::from_tokens(
      std::vector<std::string>(vocab_tokens.begin() + 3, vocab_tokens.end()));
  ckpt.tag_names = manifest.at("tags").get<std::vector<std::string>>();
  ckpt.tokenizer_kind = manifest.at("tokenizer").get<std::string>();
  ckpt.match_threshold = manifest.at("match_threshold").get<double>();
  ckpt.config_hash_hex = manifest.at("config_hash").get<std::string>();

  const int d = ckpt.enc_cfg.dim;
  const int fw = ckpt.enc_cfg.feature_width();
  const int v = static_cast<int>(vocab_tokens.size());

  std::map<std::string, std::vector<double>> arrays;
  const std::uint32_t count = read_u32(in);
  for (std::uint32_t a = 0; a < count; ++a) {
    std::uint16_t nlen;
    read_bytes(in, &nlen, 2);
    std::string name(nlen, '\0');
    read_bytes(in, name.data(), nlen);
    std::vector<double> data(read_u64(in));
    read_bytes(in, data.data(), data.size() * sizeof(double));
    arrays[name] = std::move(data);
  }

  auto take = [&](const std::string& name, std::size_t expected) {
    auto it = arrays.find(name);
    if (it == arrays.end()) throw ValidationError("checkpoint missing array: " + name);
    if (it->second.size() != expected)
      throw ValidationError("checkpoint array " + name + " has size " +
                            std::to_string(it->second.size()) + ", expected " +
                            std::to_string(expected));
    return std::move(it->second);
  };

  ckpt.params.emb = Matrix(v, d);
  ckpt.params.emb.data() = take("emb", std::size_t(v) * d);
  for (int l = 0; l < ckpt.enc_cfg.layers; ++l) {
    Matrix w(d, fw);
    w.data() = take("mix_w" + std::to_string(l), std::size_t(d) * fw);
    ckpt.params.mix_w.push_back(std::move(w));
    ckpt.params.mix_b.push_back(take("mix_b" + std::to_string(l), d));
  }
  ckpt.params.heads.t_start = Matrix(d, 2);
  ckpt.params.heads.t_start.data() = take("t_start", std::size_t(d) * 2);
  ckpt.params.heads.t_end = Matrix(d, 2);
  ckpt.params.heads.t_end.data() = take("t_end", std::size_t(d) * 2);
  ckpt.params.heads.match_weights = take("match_w", std::size_t(2) * d);
  return ckpt;
}

}  // namespace mrcner
