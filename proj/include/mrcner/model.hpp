#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mrcner/dataset.hpp"
#include "mrcner/matrix.hpp"

namespace mrcner {

// Token-id table. Ids 0..2 are reserved for <unk>, <cls>, <sep>; the rest
// follow insertion order. Unknown tokens map to <unk>.
class Vocabulary {
 public:
  static constexpr int kUnk = 0;
  static constexpr int kCls = 1;
  static constexpr int kSep = 2;

  Vocabulary();
  static Vocabulary from_tokens(const std::vector<std::string>& tokens);
  static Vocabulary load(const std::string& path);
  void save(const std::string& path) const;

  int id(const std::string& token) const;
  std::vector<int> ids(const std::vector<std::string>& tokens) const;
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int> index_;
};

// The combined {<cls>, q_1..q_m, <sep>, x_1..x_n} id sequence plus the
// slices locating query and context inside it. No separator after the
// context.
struct EncoderInput {
  std::vector<int> combined_ids;
  int query_begin = 0;
  int query_len = 0;
  int context_begin = 0;
  int context_len = 0;
};

// Context representation matrix E, one row per context token.
struct ReprMatrix {
  Matrix values;  // n × d
  std::size_t n() const { return values.rows(); }
  std::size_t dim() const { return values.cols(); }
};

// Boundary heads and the start-end matching vector.
struct HeadParams {
  Matrix t_start;                 // d × 2
  Matrix t_end;                   // d × 2
  std::vector<double> match_weights;  // 2d
};

// Row distributions for the two boundary heads plus per-candidate-pair
// match probabilities. Keys always satisfy i <= j.
struct ProbOutputs {
  Matrix p_start;  // n × 2, rows sum to 1
  Matrix p_end;    // n × 2
  std::map<std::pair<int, int>, double> p_match;
};

struct LossWeights {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
};

struct LossBreakdown {
  double start_term = 0.0;  // unweighted token-averaged CE
  double end_term = 0.0;
  double span_term = 0.0;   // unweighted pair-averaged BCE
  double total = 0.0;       // alpha*start + beta*end + gamma*span
};

// Reference encoder: trainable embeddings plus a stack of query-conditioned
// bidirectional mixing layers. Each layer sees, per context position, the
// previous layer's vector at i-1/i/i+1, the mean query embedding, and
// cosine similarities between the token embedding and the first
// `query_slots` query-token embeddings.
struct ToyEncoderConfig {
  int dim = 24;
  int layers = 1;
  int query_slots = 4;
  int max_seq_len = 512;

  int feature_width() const { return 4 * dim + query_slots; }
};

struct ModelParams {
  Matrix emb;                          // V × d
  std::vector<Matrix> mix_w;           // layers × (d × feature_width)
  std::vector<std::vector<double>> mix_b;  // layers × d
  HeadParams heads;
};

// Gradient buffers mirroring ModelParams.
struct ModelGrads {
  Matrix emb;
  std::vector<Matrix> mix_w;
  std::vector<std::vector<double>> mix_b;
  Matrix t_start;
  Matrix t_end;
  std::vector<double> match_w;
};

ModelParams init_params(int vocab_size, const ToyEncoderConfig& cfg, std::uint64_t seed);
ModelGrads zero_grads(const ModelParams& params);
void accumulate_grads(ModelGrads& into, const ModelGrads& g, double scale);
void sgd_step(ModelParams& params, const ModelGrads& grads, double learning_rate);

// Uniform enumeration of every scalar parameter; grads enumerate in the
// same order. Used by the finite-difference checks.
void for_each_param(ModelParams& params, const std::function<void(double&)>& fn);
void for_each_grad(const ModelGrads& grads, const std::function<void(double)>& fn);

// Throws ValidationError when 2 + m + n exceeds cfg.max_seq_len.
EncoderInput make_encoder_input(const Vocabulary& vocab,
                                const std::vector<std::string>& query_tokens,
                                const std::vector<std::string>& context_tokens,
                                const ToyEncoderConfig& cfg);

// Forward pass state retained for backprop.
struct EncoderForward {
  EncoderInput input;
  std::vector<double> qbar;   // d
  Matrix slots;               // n × query_slots
  std::vector<Matrix> h;      // layers+1 of n × d; h[0] = context embeddings
  ReprMatrix repr() const { return ReprMatrix{h.back()}; }
};

EncoderForward toy_forward(const ModelParams& params, const ToyEncoderConfig& cfg,
                           const EncoderInput& input);
ReprMatrix toy_encode(const ModelParams& params, const ToyEncoderConfig& cfg,
                      const EncoderInput& input);

// Propagates d(loss)/d(repr) back through the mixing stack, the query
// summary and the similarity slots into embedding/layer gradients.
void toy_backward(const ModelParams& params, const ToyEncoderConfig& cfg,
                  const EncoderForward& fwd, const Matrix& d_repr, ModelGrads& grads);

// Row-wise softmax of E * T_start; each row the (not-start, start)
// distribution for one token.
Matrix predict_start(const ReprMatrix& e, const HeadParams& heads);
Matrix predict_end(const ReprMatrix& e, const HeadParams& heads);

// sigmoid(match_weights . concat(E_i, E_j)); requires 0 <= i <= j < n.
double match_probability(const ReprMatrix& e, int i, int j, const HeadParams& heads);

// Candidate (i, j) grid with i <= j. Training mode (gold != nullptr) takes
// starts/ends from the union of gold and predicted boundary sets so every
// positive pair is present and current false boundaries supply hard
// negatives; inference mode uses predicted sets only.
std::set<std::pair<int, int>> candidate_pairs(const LabelTensors* gold,
                                              const std::set<int>& pred_starts,
                                              const std::set<int>& pred_ends);

// alpha*CE(p_start, y_start) + beta*CE(p_end, y_end) + gamma*BCE over the
// candidate pairs. CE terms are token-averaged, BCE pair-averaged. Throws
// ValidationError when a positive gold pair is missing from p_match.
LossBreakdown compute_loss(const ProbOutputs& probs, const LabelTensors& gold,
                           const LossWeights& w);

// One full forward pass: encoder, boundary heads, boundary extraction,
// candidate construction, match probabilities.
struct ModelForward {
  EncoderForward enc;
  ProbOutputs probs;
  std::set<int> pred_starts;
  std::set<int> pred_ends;
};

ModelForward run_model(const ModelParams& params, const ToyEncoderConfig& cfg,
                       const EncoderInput& input, const LabelTensors* gold);
ModelForward run_model_with_candidates(const ModelParams& params, const ToyEncoderConfig& cfg,
                                       const EncoderInput& input,
                                       const std::set<std::pair<int, int>>& candidates);

// Analytic gradients of compute_loss' total for every parameter. The
// candidate set of `fwd` is treated as fixed. Encoder parameters receive
// the summed contribution of all three loss terms.
ModelGrads loss_gradients(const ModelParams& params, const ToyEncoderConfig& cfg,
                          const ModelForward& fwd, const LabelTensors& gold,
                          const LossWeights& w);

// Encoder contract for adapters mapping token sequences to context
// representations. The toy encoder is the in-repo implementation;
// pretrained-transformer adapters plug in behind the same surface.
class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual ReprMatrix encode(const EncoderInput& input) const = 0;
  virtual int dim() const = 0;
};

class ToyEncoder : public Encoder {
 public:
  ToyEncoder(ModelParams params, ToyEncoderConfig cfg)
      : params_(std::move(params)), cfg_(cfg) {}
  ReprMatrix encode(const EncoderInput& input) const override {
    return toy_encode(params_, cfg_, input);
  }
  int dim() const override { return cfg_.dim; }

 private:
  ModelParams params_;
  ToyEncoderConfig cfg_;
};

// Everything needed to run prediction: parameters plus the manifest
// describing them. Serialized as a single binary file of named float64
// arrays; save is write-then-rename and round-trips bit-exactly.
struct Checkpoint {
  std::string version;
  std::string encoder_kind = "toy";
  ToyEncoderConfig enc_cfg;
  Vocabulary vocab;
  std::vector<std::string> tag_names;
  std::string tokenizer_kind = "whitespace";
  double match_threshold = 0.5;
  std::string config_hash_hex;
  ModelParams params;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace mrcner
