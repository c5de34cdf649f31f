#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "alkit/common.hpp"
#include "alkit/feature.hpp"
#include "alkit/matrix.hpp"
#include "alkit/pool.hpp"
#include "alkit/rng.hpp"
#include "alkit/uncertainty.hpp"

namespace alkit {

struct TrainConfig {
  int hidden_width = 64;
  double dropout_rate = 0.1;  // inverted dropout on the hidden layer
  double learning_rate = 0.1;
  int epochs = 10;
  int batch_size = 32;
  std::uint64_t seed = 0;
  // Token featurization for the toy classifier.
  int pad_len = 256;
  int pad_id = 0;
  // Sequence model.
  int embed_dim = 16;
  int max_gen_len = 32;

  void validate() const;
};

struct GeneratedSeq {
  std::vector<int> tokens;          // greedy decode, stop token excluded
  std::vector<double> loglik;       // natural-log likelihood per emitted token
};

// Uniform model contract consumed by acquisition and simulation: anything
// that can expose class probabilities, an embedding view, or generated
// sequences over pool items. Trained instances are immutable for inference;
// train() always restarts from scratch with the supplied generator.
class ModelOracle {
 public:
  virtual ~ModelOracle() = default;

  virtual std::string id() const = 0;
  virtual bool supports(TaskKind task) const = 0;
  virtual bool supports_stochastic() const { return false; }
  virtual bool is_trained() const = 0;

  virtual void train(const Pool& pool, std::span<const int> labeled,
                     Rng& rng) = 0;

  virtual ProbMatrix predict_proba(const Pool& pool,
                                   std::span<const int> items) const = 0;

  // One dropout-noised forward pass. Only dropout-capable models override.
  virtual ProbMatrix predict_proba_stochastic(const Pool& pool,
                                              std::span<const int> items,
                                              Rng& rng) const;

  // Raw embedding rows; make_feature_view wraps them into a tagged view.
  virtual Matrix embed(const Pool& pool, std::span<const int> items) const = 0;

  // Model output vectors; defaults to the probability rows.
  virtual Matrix output_view(const Pool& pool,
                             std::span<const int> items) const;

  virtual std::vector<GeneratedSeq> generate(const Pool& pool,
                                             std::span<const int> items) const;

  // Teacher-forced log-likelihood of the item's reference, one entry per
  // reference token plus the end-of-sequence step.
  virtual std::vector<double> reference_loglik(const Pool& pool,
                                               int item) const;

  // Token embedding table of the trained model, when it has one.
  virtual std::optional<Matrix> token_embeddings() const {
    return std::nullopt;
  }
};

// One-hidden-layer softmax network. Weights are public so gradient tests can
// perturb them directly.
struct MlpNet {
  Matrix w1;                // hidden x input
  std::vector<double> b1;   // hidden
  Matrix w2;                // classes x hidden
  std::vector<double> b2;   // classes
  double dropout_rate = 0.0;

  static MlpNet init(std::size_t input_dim, std::size_t hidden,
                     std::size_t classes, double dropout_rate, Rng& rng);

  std::size_t input_dim() const { return w1.cols(); }
  std::size_t hidden() const { return w1.rows(); }
  std::size_t classes() const { return w2.rows(); }

  // relu(w1 x + b1), optionally with an inverted-dropout mask drawn from rng.
  std::vector<double> penult(std::span<const double> x) const;
  std::vector<double> penult_stochastic(std::span<const double> x,
                                        Rng& rng) const;
  std::vector<double> proba_from_penult(std::span<const double> h) const;
  std::vector<double> proba(std::span<const double> x) const;
  std::vector<double> proba_stochastic(std::span<const double> x,
                                       Rng& rng) const;

  struct Grads {
    Matrix w1;
    std::vector<double> b1;
    Matrix w2;
    std::vector<double> b2;

    void reset(const MlpNet& net);
  };

  // Mean cross-entropy over the batch; grads come back averaged the same
  // way. rng feeds dropout masks and is only touched when use_dropout and
  // dropout_rate > 0.
  double loss_and_grads(const Matrix& x, std::span<const int> y,
                        std::span<const std::size_t> batch, bool use_dropout,
                        Rng& rng, Grads& g) const;
  double loss(const Matrix& x, std::span<const int> y,
              std::span<const std::size_t> batch) const;
  void sgd_step(const Grads& g, double lr);
};

// Mini-batch SGD on cross-entropy. num_classes 0 infers max(label)+1; at
// least two distinct labels must be present either way.
MlpNet train_mlp(const Matrix& x, std::span<const int> labels,
                 const TrainConfig& cfg, Rng& rng, int num_classes = 0);

// Trains on the given rows and returns an oracle that answers for exactly
// the view's item ids (it keeps the rows; the pool argument of inference
// calls is ignored beyond ids).
std::unique_ptr<ModelOracle> train_classifier(const FeatureView& features,
                                              std::span<const int> labels,
                                              const TrainConfig& cfg);

// Mean-of-token-embeddings encoder plus an autoregressive affine-softmax
// decoder over vocab + 1 outputs (last id = end of sequence). The decoder
// weights start at zero, so an untrained net emits the uniform distribution.
struct SeqNet {
  Matrix enc_table;   // vocab x e
  Matrix prev_table;  // (v_out + 1) x e; last row is the begin marker
  Matrix w;           // v_out x 2e
  std::vector<double> b;
  int vocab = 0;
  int embed_dim = 0;

  static SeqNet init(int vocab, int embed_dim, Rng& rng);

  int v_out() const { return vocab + 1; }
  int eos() const { return vocab; }
  int bos_row() const { return v_out(); }

  std::vector<double> encode(std::span<const int> tokens) const;
  // prev is an output id in [0, v_out) or bos_row().
  std::vector<double> step_proba(std::span<const double> enc, int prev) const;
  std::vector<double> reference_loglik(std::span<const int> input,
                                       std::span<const int> ref) const;
  GeneratedSeq generate(std::span<const int> input, int max_len) const;
};

// Teacher forcing on cross-entropy, batch-accumulated SGD, gradients
// averaged per target token.
SeqNet train_seqnet(const Pool& pool, std::span<const int> labeled,
                    const TrainConfig& cfg, Rng& rng);

// Pool-featurizing oracles used by the simulator. The classifier feeds the
// padded token view (scaled into [0,1] by the vocab size) through an MlpNet;
// the sequence model wraps SeqNet.
std::unique_ptr<ModelOracle> make_toy_classifier(TrainConfig cfg = {});
std::unique_ptr<ModelOracle> make_toy_seqmodel(TrainConfig cfg = {});

// Replays matrices exported from a real model; train is a warning no-op and
// stochastic passes are unsupported.
std::unique_ptr<ModelOracle> make_external_adapter(Matrix proba, Matrix embed,
                                                   std::vector<int> ids);
// Matrices in ALFV or CSV; ids_path names a JSON int array, or "" for row
// order 0..n-1.
std::unique_ptr<ModelOracle> load_external_adapter(
    const std::string& proba_path, const std::string& embed_path,
    const std::string& ids_path = "");

}  // namespace alkit
