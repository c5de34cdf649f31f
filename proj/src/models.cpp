#include "alkit/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include <json.hpp>

#include "alkit/io.hpp"

namespace alkit {

void TrainConfig::validate() const {
  if (hidden_width < 1) throw ConfigError("train config: hidden_width < 1");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0)
    throw ConfigError("train config: dropout_rate must be in [0, 1)");
  if (!(learning_rate > 0.0))
    throw ConfigError("train config: learning_rate must be > 0");
  if (epochs < 1) throw ConfigError("train config: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train config: batch_size < 1");
  if (pad_len < 1) throw ConfigError("train config: pad_len < 1");
  if (embed_dim < 1) throw ConfigError("train config: embed_dim < 1");
  if (max_gen_len < 1) throw ConfigError("train config: max_gen_len < 1");
}

ProbMatrix ModelOracle::predict_proba_stochastic(const Pool&,
                                                 std::span<const int>,
                                                 Rng&) const {
  throw CapabilityError("stochastic passes unsupported");
}

Matrix ModelOracle::output_view(const Pool& pool,
                                std::span<const int> items) const {
  return predict_proba(pool, items).p;
}

std::vector<GeneratedSeq> ModelOracle::generate(const Pool&,
                                                std::span<const int>) const {
  throw CapabilityError("generation unsupported by model " + id());
}

std::vector<double> ModelOracle::reference_loglik(const Pool&, int) const {
  throw CapabilityError("reference log-likelihood unsupported by model " +
                        id());
}

namespace {

std::vector<double> softmax(std::vector<double> z) {
  double m = z[0];
  for (double v : z) m = std::max(m, v);
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : z) v /= sum;
  return z;
}

}  // namespace

MlpNet MlpNet::init(std::size_t input_dim, std::size_t hidden,
                    std::size_t classes, double dropout_rate, Rng& rng) {
  MlpNet net;
  net.dropout_rate = dropout_rate;
  net.w1 = Matrix(hidden, input_dim);
  net.b1.assign(hidden, 0.0);
  net.w2 = Matrix(classes, hidden);
  net.b2.assign(classes, 0.0);
  const double l1 = std::sqrt(6.0 / static_cast<double>(input_dim + hidden));
  for (std::size_t i = 0; i < hidden; ++i)
    for (std::size_t j = 0; j < input_dim; ++j)
      net.w1.at(i, j) = l1 * (2.0 * rng.uniform() - 1.0);
  const double l2 = std::sqrt(6.0 / static_cast<double>(hidden + classes));
  for (std::size_t i = 0; i < classes; ++i)
    for (std::size_t j = 0; j < hidden; ++j)
      net.w2.at(i, j) = l2 * (2.0 * rng.uniform() - 1.0);
  return net;
}

std::vector<double> MlpNet::penult(std::span<const double> x) const {
  if (x.size() != input_dim())
    throw ConfigError("classifier: input dimension mismatch");
  std::vector<double> h(hidden());
  for (std::size_t i = 0; i < hidden(); ++i) {
    double z = b1[i];
    auto wrow = w1.row(i);
    for (std::size_t j = 0; j < x.size(); ++j) z += wrow[j] * x[j];
    h[i] = z > 0.0 ? z : 0.0;
  }
  return h;
}

std::vector<double> MlpNet::penult_stochastic(std::span<const double> x,
                                              Rng& rng) const {
  std::vector<double> h = penult(x);
  if (dropout_rate > 0.0) {
    const double keep = 1.0 - dropout_rate;
    for (double& v : h) v = rng.uniform() < keep ? v / keep : 0.0;
  }
  return h;
}

std::vector<double> MlpNet::proba_from_penult(std::span<const double> h) const {
  if (h.size() != hidden())
    throw ConfigError("classifier: hidden dimension mismatch");
  std::vector<double> z(classes());
  for (std::size_t i = 0; i < classes(); ++i) {
    double s = b2[i];
    auto wrow = w2.row(i);
    for (std::size_t j = 0; j < h.size(); ++j) s += wrow[j] * h[j];
    z[i] = s;
  }
  return softmax(std::move(z));
}

std::vector<double> MlpNet::proba(std::span<const double> x) const {
  return proba_from_penult(penult(x));
}

std::vector<double> MlpNet::proba_stochastic(std::span<const double> x,
                                             Rng& rng) const {
  return proba_from_penult(penult_stochastic(x, rng));
}

void MlpNet::Grads::reset(const MlpNet& net) {
  w1 = Matrix(net.w1.rows(), net.w1.cols(), 0.0);
  b1.assign(net.b1.size(), 0.0);
  w2 = Matrix(net.w2.rows(), net.w2.cols(), 0.0);
  b2.assign(net.b2.size(), 0.0);
}

double MlpNet::loss_and_grads(const Matrix& x, std::span<const int> y,
                              std::span<const std::size_t> batch,
                              bool use_dropout, Rng& rng, Grads& g) const {
  if (batch.empty()) throw ConfigError("classifier: empty batch");
  g.reset(*this);
  const bool drop = use_dropout && dropout_rate > 0.0;
  const double keep = 1.0 - dropout_rate;
  double total = 0.0;
  std::vector<double> mask(hidden(), 1.0);
  for (std::size_t s : batch) {
    auto xs = x.row(s);
    std::vector<double> z1(hidden());
    std::vector<double> h(hidden());
    for (std::size_t i = 0; i < hidden(); ++i) {
      double z = b1[i];
      auto wrow = w1.row(i);
      for (std::size_t j = 0; j < xs.size(); ++j) z += wrow[j] * xs[j];
      z1[i] = z;
      h[i] = z > 0.0 ? z : 0.0;
    }
    if (drop)
      for (std::size_t i = 0; i < hidden(); ++i) {
        mask[i] = rng.uniform() < keep ? 1.0 / keep : 0.0;
        h[i] *= mask[i];
      }
    std::vector<double> p = proba_from_penult(h);

    const int label = y[s];
    total += -std::log(std::max(p[static_cast<std::size_t>(label)], 1e-300));

    // dL/dz2 = p - onehot(label)
    std::vector<double> dz2 = p;
    dz2[static_cast<std::size_t>(label)] -= 1.0;
    std::vector<double> dh(hidden(), 0.0);
    for (std::size_t c = 0; c < classes(); ++c) {
      auto grow = g.w2.row(c);
      auto wrow = w2.row(c);
      for (std::size_t i = 0; i < hidden(); ++i) {
        grow[i] += dz2[c] * h[i];
        dh[i] += wrow[i] * dz2[c];
      }
      g.b2[c] += dz2[c];
    }
    for (std::size_t i = 0; i < hidden(); ++i) {
      double d = dh[i];
      if (drop) d *= mask[i];
      if (z1[i] <= 0.0) d = 0.0;
      if (d == 0.0) continue;
      auto grow = g.w1.row(i);
      for (std::size_t j = 0; j < xs.size(); ++j)
        grow[j] += d * xs[j];
      g.b1[i] += d;
    }
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < g.w1.rows() * g.w1.cols(); ++i)
    g.w1.data()[i] *= inv;
  for (double& v : g.b1) v *= inv;
  for (std::size_t i = 0; i < g.w2.rows() * g.w2.cols(); ++i)
    g.w2.data()[i] *= inv;
  for (double& v : g.b2) v *= inv;
  return total * inv;
}

double MlpNet::loss(const Matrix& x, std::span<const int> y,
                    std::span<const std::size_t> batch) const {
  if (batch.empty()) throw ConfigError("classifier: empty batch");
  double total = 0.0;
  for (std::size_t s : batch) {
    std::vector<double> p = proba(x.row(s));
    total +=
        -std::log(std::max(p[static_cast<std::size_t>(y[s])], 1e-300));
  }
  return total / static_cast<double>(batch.size());
}

void MlpNet::sgd_step(const Grads& g, double lr) {
  for (std::size_t i = 0; i < w1.rows() * w1.cols(); ++i)
    w1.data()[i] -= lr * g.w1.data()[i];
  for (std::size_t i = 0; i < b1.size(); ++i) b1[i] -= lr * g.b1[i];
  for (std::size_t i = 0; i < w2.rows() * w2.cols(); ++i)
    w2.data()[i] -= lr * g.w2.data()[i];
  for (std::size_t i = 0; i < b2.size(); ++i) b2[i] -= lr * g.b2[i];
}

MlpNet train_mlp(const Matrix& x, std::span<const int> labels,
                 const TrainConfig& cfg, Rng& rng, int num_classes) {
  cfg.validate();
  if (x.rows() != labels.size())
    throw ConfigError("train_classifier: rows/labels length mismatch");
  if (x.rows() == 0) throw ConfigError("train_classifier: empty training set");

  int max_label = -1;
  std::vector<int> seen;
  for (int l : labels) {
    if (l < 0) throw ConfigError("train_classifier: negative label");
    max_label = std::max(max_label, l);
    if (std::find(seen.begin(), seen.end(), l) == seen.end())
      seen.push_back(l);
  }
  if (seen.size() < 2)
    throw ConfigError("train_classifier: needs at least 2 distinct labels");
  const int classes = num_classes > 0 ? num_classes : max_label + 1;
  if (max_label >= classes)
    throw ConfigError("train_classifier: label " + std::to_string(max_label) +
                      " outside [0, " + std::to_string(classes) + ")");

  MlpNet net = MlpNet::init(x.cols(), static_cast<std::size_t>(cfg.hidden_width),
                            static_cast<std::size_t>(classes),
                            cfg.dropout_rate, rng);
  std::vector<std::size_t> perm(x.rows());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  MlpNet::Grads g;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(perm);
    for (std::size_t off = 0; off < perm.size();
         off += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t len = std::min(
          static_cast<std::size_t>(cfg.batch_size), perm.size() - off);
      const double loss = net.loss_and_grads(
          x, labels, std::span<const std::size_t>(perm).subspan(off, len),
          true, rng, g);
      if (!std::isfinite(loss))
        throw NumericError(
            "train_classifier: loss diverged to " + std::to_string(loss) +
            " at epoch " + std::to_string(epoch) + " (learning_rate=" +
            std::to_string(cfg.learning_rate) + ", hidden_width=" +
            std::to_string(cfg.hidden_width) + ")");
      // A ragged trailing batch steps with a proportionally smaller rate, so
      // every example carries the same weight within an epoch and model
      // quality cannot depend on the training-set size modulo batch_size.
      const double fill = static_cast<double>(len) /
                          static_cast<double>(cfg.batch_size);
      net.sgd_step(g, cfg.learning_rate * fill);
    }
  }
  return net;
}

namespace {

// Oracle over a fixed feature view: keeps the training rows and answers
// inference calls for exactly those item ids.
class ViewBackedClassifier final : public ModelOracle {
 public:
  ViewBackedClassifier(const FeatureView& features, MlpNet net)
      : rows_(features.m), ids_(features.item_ids), net_(std::move(net)) {
    for (std::size_t i = 0; i < ids_.size(); ++i)
      index_.emplace(ids_[i], i);
  }

  std::string id() const override { return "view_classifier"; }
  bool supports(TaskKind task) const override {
    return task == TaskKind::classification;
  }
  bool supports_stochastic() const override { return true; }
  bool is_trained() const override { return true; }

  void train(const Pool&, std::span<const int>, Rng&) override {
    throw CapabilityError(
        "view-backed classifier cannot retrain from a pool");
  }

  ProbMatrix predict_proba(const Pool&,
                           std::span<const int> items) const override {
    Matrix out(items.size(), net_.classes());
    for (std::size_t r = 0; r < items.size(); ++r) {
      auto p = net_.proba(rows_.row(resolve(items[r])));
      for (std::size_t c = 0; c < p.size(); ++c) out.at(r, c) = p[c];
    }
    return ProbMatrix::from(std::move(out));
  }

  ProbMatrix predict_proba_stochastic(const Pool&, std::span<const int> items,
                                      Rng& rng) const override {
    Matrix out(items.size(), net_.classes());
    for (std::size_t r = 0; r < items.size(); ++r) {
      auto p = net_.proba_stochastic(rows_.row(resolve(items[r])), rng);
      for (std::size_t c = 0; c < p.size(); ++c) out.at(r, c) = p[c];
    }
    return ProbMatrix::from(std::move(out));
  }

  Matrix embed(const Pool&, std::span<const int> items) const override {
    Matrix out(items.size(), net_.hidden());
    for (std::size_t r = 0; r < items.size(); ++r) {
      auto h = net_.penult(rows_.row(resolve(items[r])));
      for (std::size_t c = 0; c < h.size(); ++c) out.at(r, c) = h[c];
    }
    return out;
  }

  const MlpNet& net() const { return net_; }

 private:
  std::size_t resolve(int item) const {
    auto it = index_.find(item);
    if (it == index_.end())
      throw ConfigError("view-backed classifier: no stored features for item " +
                        std::to_string(item));
    return it->second;
  }

  Matrix rows_;
  std::vector<int> ids_;
  std::unordered_map<int, std::size_t> index_;
  MlpNet net_;
};

// Featurizes pool items as scaled padded token rows and trains an MlpNet
// from scratch on every train() call.
class ToyClassifier final : public ModelOracle {
 public:
  explicit ToyClassifier(TrainConfig cfg) : cfg_(cfg) { cfg_.validate(); }

  std::string id() const override { return "toy_classifier"; }
  bool supports(TaskKind task) const override {
    return task == TaskKind::classification;
  }
  bool supports_stochastic() const override { return true; }
  bool is_trained() const override { return net_.has_value(); }

  void train(const Pool& pool, std::span<const int> labeled,
             Rng& rng) override {
    if (pool.task != TaskKind::classification)
      throw CapabilityError("toy classifier requires a classification pool");
    if (labeled.empty())
      throw ConfigError("toy classifier: empty labeled set");
    scale_ = 1.0 / static_cast<double>(std::max(1, pool.vocab_size));
    Matrix x = featurize(pool, labeled);
    std::vector<int> y(labeled.size());
    for (std::size_t i = 0; i < labeled.size(); ++i)
      y[i] = pool.items[static_cast<std::size_t>(labeled[i])].class_label;
    net_ = train_mlp(x, y, cfg_, rng, pool.num_classes);
  }

  ProbMatrix predict_proba(const Pool& pool,
                           std::span<const int> items) const override {
    const MlpNet& net = require();
    Matrix x = featurize(pool, items);
    Matrix out(items.size(), net.classes());
    for (std::size_t r = 0; r < items.size(); ++r) {
      auto p = net.proba(x.row(r));
      for (std::size_t c = 0; c < p.size(); ++c) out.at(r, c) = p[c];
    }
    return ProbMatrix::from(std::move(out));
  }

  ProbMatrix predict_proba_stochastic(const Pool& pool,
                                      std::span<const int> items,
                                      Rng& rng) const override {
    const MlpNet& net = require();
    Matrix x = featurize(pool, items);
    Matrix out(items.size(), net.classes());
    for (std::size_t r = 0; r < items.size(); ++r) {
      auto p = net.proba_stochastic(x.row(r), rng);
      for (std::size_t c = 0; c < p.size(); ++c) out.at(r, c) = p[c];
    }
    return ProbMatrix::from(std::move(out));
  }

  Matrix embed(const Pool& pool, std::span<const int> items) const override {
    const MlpNet& net = require();
    Matrix x = featurize(pool, items);
    Matrix out(items.size(), net.hidden());
    for (std::size_t r = 0; r < items.size(); ++r) {
      auto h = net.penult(x.row(r));
      for (std::size_t c = 0; c < h.size(); ++c) out.at(r, c) = h[c];
    }
    return out;
  }

 private:
  const MlpNet& require() const {
    if (!net_) throw ConfigError("model is not trained");
    return *net_;
  }

  Matrix featurize(const Pool& pool, std::span<const int> items) const {
    std::vector<int> ids(items.begin(), items.end());
    FeatureView v = make_feature_view(pool, FeatureKind::token, nullptr, ids,
                                      cfg_.pad_len, cfg_.pad_id);
    for (std::size_t i = 0; i < v.m.rows() * v.m.cols(); ++i)
      v.m.data()[i] *= scale_;
    return std::move(v.m);
  }

  TrainConfig cfg_;
  double scale_ = 1.0;
  std::optional<MlpNet> net_;
};

}  // namespace

std::unique_ptr<ModelOracle> train_classifier(const FeatureView& features,
                                              std::span<const int> labels,
                                              const TrainConfig& cfg) {
  features.validate();
  Rng rng(cfg.seed);
  MlpNet net = train_mlp(features.m, labels, cfg, rng);
  return std::make_unique<ViewBackedClassifier>(features, std::move(net));
}

SeqNet SeqNet::init(int vocab, int embed_dim, Rng& rng) {
  if (vocab < 1) throw ConfigError("sequence model: vocab must be >= 1");
  if (embed_dim < 1) throw ConfigError("sequence model: embed_dim must be >= 1");
  SeqNet net;
  net.vocab = vocab;
  net.embed_dim = embed_dim;
  const std::size_t e = static_cast<std::size_t>(embed_dim);
  net.enc_table = Matrix(static_cast<std::size_t>(vocab), e);
  net.prev_table = Matrix(static_cast<std::size_t>(net.v_out()) + 1, e);
  for (std::size_t i = 0; i < net.enc_table.rows(); ++i)
    for (std::size_t j = 0; j < e; ++j)
      net.enc_table.at(i, j) = 0.1 * (2.0 * rng.uniform() - 1.0);
  for (std::size_t i = 0; i < net.prev_table.rows(); ++i)
    for (std::size_t j = 0; j < e; ++j)
      net.prev_table.at(i, j) = 0.1 * (2.0 * rng.uniform() - 1.0);
  // Zero decoder weights: the untrained net emits the uniform distribution.
  net.w = Matrix(static_cast<std::size_t>(net.v_out()), 2 * e, 0.0);
  net.b.assign(static_cast<std::size_t>(net.v_out()), 0.0);
  return net;
}

std::vector<double> SeqNet::encode(std::span<const int> tokens) const {
  if (tokens.empty()) throw ConfigError("sequence model: empty input");
  std::vector<double> enc(static_cast<std::size_t>(embed_dim), 0.0);
  for (int t : tokens) {
    if (t < 0 || t >= vocab)
      throw ConfigError("sequence model: token " + std::to_string(t) +
                        " out of vocab range");
    auto row = enc_table.row(static_cast<std::size_t>(t));
    for (std::size_t j = 0; j < enc.size(); ++j) enc[j] += row[j];
  }
  for (double& v : enc) v /= static_cast<double>(tokens.size());
  return enc;
}

std::vector<double> SeqNet::step_proba(std::span<const double> enc,
                                       int prev) const {
  if (prev < 0 || prev > bos_row())
    throw ConfigError("sequence model: bad previous token id");
  auto pe = prev_table.row(static_cast<std::size_t>(prev));
  const std::size_t e = static_cast<std::size_t>(embed_dim);
  std::vector<double> z(static_cast<std::size_t>(v_out()));
  for (std::size_t c = 0; c < z.size(); ++c) {
    double s = b[c];
    auto wrow = w.row(c);
    for (std::size_t j = 0; j < e; ++j) s += wrow[j] * enc[j];
    for (std::size_t j = 0; j < e; ++j) s += wrow[e + j] * pe[j];
    z[c] = s;
  }
  return softmax(std::move(z));
}

std::vector<double> SeqNet::reference_loglik(std::span<const int> input,
                                             std::span<const int> ref) const {
  if (ref.empty()) throw ConfigError("sequence model: empty reference");
  std::vector<double> enc = encode(input);
  std::vector<double> out;
  out.reserve(ref.size() + 1);
  int prev = bos_row();
  for (int t : ref)
    if (t < 0 || t >= vocab)
      throw ConfigError("sequence model: reference token out of vocab");
  for (std::size_t t = 0; t <= ref.size(); ++t) {
    const int target = t < ref.size() ? ref[t] : eos();
    std::vector<double> p = step_proba(enc, prev);
    out.push_back(std::log(std::max(p[static_cast<std::size_t>(target)],
                                    1e-300)));
    prev = target;
  }
  return out;
}

GeneratedSeq SeqNet::generate(std::span<const int> input, int max_len) const {
  if (max_len < 1) throw ConfigError("sequence model: max_len must be >= 1");
  std::vector<double> enc = encode(input);
  GeneratedSeq out;
  int prev = bos_row();
  for (int t = 0; t < max_len; ++t) {
    std::vector<double> p = step_proba(enc, prev);
    std::size_t best = 0;
    for (std::size_t c = 1; c < p.size(); ++c)
      if (p[c] > p[best]) best = c;  // tie keeps the smaller id
    if (static_cast<int>(best) == eos()) break;
    out.tokens.push_back(static_cast<int>(best));
    out.loglik.push_back(std::log(std::max(p[best], 1e-300)));
    prev = static_cast<int>(best);
  }
  return out;
}

SeqNet train_seqnet(const Pool& pool, std::span<const int> labeled,
                    const TrainConfig& cfg, Rng& rng) {
  cfg.validate();
  if (pool.task != TaskKind::sequence_generation)
    throw CapabilityError("sequence model requires a sequence pool");
  if (labeled.empty()) throw ConfigError("sequence model: empty labeled set");
  for (int i : labeled) {
    if (i < 0 || i >= static_cast<int>(pool.items.size()))
      throw ConfigError("sequence model: labeled index out of range");
    if (pool.items[static_cast<std::size_t>(i)].reference.empty())
      throw ConfigError("sequence model: empty reference at item " +
                        std::to_string(i));
  }

  SeqNet net = SeqNet::init(pool.vocab_size, cfg.embed_dim, rng);
  const std::size_t e = static_cast<std::size_t>(cfg.embed_dim);
  const std::size_t vout = static_cast<std::size_t>(net.v_out());

  Matrix g_enc, g_prev, g_w;
  std::vector<double> g_b;
  std::vector<std::size_t> perm(labeled.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(perm);
    for (std::size_t off = 0; off < perm.size();
         off += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t len = std::min(
          static_cast<std::size_t>(cfg.batch_size), perm.size() - off);
      g_enc = Matrix(net.enc_table.rows(), e, 0.0);
      g_prev = Matrix(net.prev_table.rows(), e, 0.0);
      g_w = Matrix(vout, 2 * e, 0.0);
      g_b.assign(vout, 0.0);
      double batch_loss = 0.0;
      std::size_t token_count = 0;

      for (std::size_t s = off; s < off + len; ++s) {
        const PoolItem& item =
            pool.items[static_cast<std::size_t>(labeled[perm[s]])];
        std::vector<double> enc = net.encode(item.tokens);
        std::vector<double> denc(e, 0.0);
        int prev = net.bos_row();
        for (std::size_t t = 0; t <= item.reference.size(); ++t) {
          const int target =
              t < item.reference.size() ? item.reference[t] : net.eos();
          std::vector<double> p = net.step_proba(enc, prev);
          batch_loss +=
              -std::log(std::max(p[static_cast<std::size_t>(target)], 1e-300));
          ++token_count;

          // dL/dlogits = p - onehot(target)
          p[static_cast<std::size_t>(target)] -= 1.0;
          auto pe = net.prev_table.row(static_cast<std::size_t>(prev));
          auto gpe = g_prev.row(static_cast<std::size_t>(prev));
          for (std::size_t c = 0; c < vout; ++c) {
            const double d = p[c];
            if (d == 0.0) continue;
            auto wrow = net.w.row(c);
            auto grow = g_w.row(c);
            for (std::size_t j = 0; j < e; ++j) {
              grow[j] += d * enc[j];
              grow[e + j] += d * pe[j];
              denc[j] += d * wrow[j];
              gpe[j] += d * wrow[e + j];
            }
            g_b[c] += d;
          }
          prev = target;
        }
        // enc is the mean of the input rows, so each input token receives an
        // equal share of the encoder gradient.
        const double share = 1.0 / static_cast<double>(item.tokens.size());
        for (int tok : item.tokens) {
          auto grow = g_enc.row(static_cast<std::size_t>(tok));
          for (std::size_t j = 0; j < e; ++j) grow[j] += share * denc[j];
        }
      }

      if (!std::isfinite(batch_loss))
        throw NumericError("sequence model: loss diverged at epoch " +
                           std::to_string(epoch));
      // Same ragged-batch policy as the classifier: the trailing batch steps
      // at a rate proportional to its fill so per-example influence stays
      // uniform across the epoch.
      const double fill = static_cast<double>(len) /
                          static_cast<double>(cfg.batch_size);
      const double step =
          cfg.learning_rate * fill / static_cast<double>(token_count);
      for (std::size_t i = 0; i < net.enc_table.rows() * e; ++i)
        net.enc_table.data()[i] -= step * g_enc.data()[i];
      for (std::size_t i = 0; i < net.prev_table.rows() * e; ++i)
        net.prev_table.data()[i] -= step * g_prev.data()[i];
      for (std::size_t i = 0; i < vout * 2 * e; ++i)
        net.w.data()[i] -= step * g_w.data()[i];
      for (std::size_t i = 0; i < vout; ++i) net.b[i] -= step * g_b[i];
    }
  }
  return net;
}

namespace {

class ToySeqModel final : public ModelOracle {
 public:
  explicit ToySeqModel(TrainConfig cfg) : cfg_(cfg) { cfg_.validate(); }

  std::string id() const override { return "toy_seqmodel"; }
  bool supports(TaskKind task) const override {
    return task == TaskKind::sequence_generation;
  }
  bool is_trained() const override { return net_.has_value(); }

  void train(const Pool& pool, std::span<const int> labeled,
             Rng& rng) override {
    net_ = train_seqnet(pool, labeled, cfg_, rng);
  }

  ProbMatrix predict_proba(const Pool&, std::span<const int>) const override {
    throw CapabilityError("sequence model has no class probabilities");
  }

  Matrix embed(const Pool& pool, std::span<const int> items) const override {
    const SeqNet& net = require();
    Matrix out(items.size(), static_cast<std::size_t>(net.embed_dim));
    for (std::size_t r = 0; r < items.size(); ++r) {
      auto enc = net.encode(item_tokens(pool, items[r]));
      for (std::size_t c = 0; c < enc.size(); ++c) out.at(r, c) = enc[c];
    }
    return out;
  }

  // Mean of the per-step decoder distributions along the greedy decode
  // (including the step that emits the stop token), so rows stay proper
  // probability vectors of width v_out.
  Matrix output_view(const Pool& pool,
                     std::span<const int> items) const override {
    const SeqNet& net = require();
    Matrix out(items.size(), static_cast<std::size_t>(net.v_out()), 0.0);
    for (std::size_t r = 0; r < items.size(); ++r) {
      std::vector<double> enc = net.encode(item_tokens(pool, items[r]));
      int prev = net.bos_row();
      int steps = 0;
      for (int t = 0; t < cfg_.max_gen_len; ++t) {
        std::vector<double> p = net.step_proba(enc, prev);
        for (std::size_t c = 0; c < p.size(); ++c) out.at(r, c) += p[c];
        ++steps;
        std::size_t best = 0;
        for (std::size_t c = 1; c < p.size(); ++c)
          if (p[c] > p[best]) best = c;
        if (static_cast<int>(best) == net.eos()) break;
        prev = static_cast<int>(best);
      }
      for (std::size_t c = 0; c < out.cols(); ++c)
        out.at(r, c) /= static_cast<double>(steps);
    }
    return out;
  }

  std::vector<GeneratedSeq> generate(const Pool& pool,
                                     std::span<const int> items) const override {
    const SeqNet& net = require();
    std::vector<GeneratedSeq> out;
    out.reserve(items.size());
    for (int i : items)
      out.push_back(net.generate(item_tokens(pool, i), cfg_.max_gen_len));
    return out;
  }

  std::vector<double> reference_loglik(const Pool& pool,
                                       int item) const override {
    const SeqNet& net = require();
    const PoolItem& it = pool.items.at(static_cast<std::size_t>(item));
    return net.reference_loglik(it.tokens, it.reference);
  }

  std::optional<Matrix> token_embeddings() const override {
    if (!net_) return std::nullopt;
    return net_->enc_table;
  }

 private:
  const SeqNet& require() const {
    if (!net_) throw ConfigError("model is not trained");
    return *net_;
  }

  static std::span<const int> item_tokens(const Pool& pool, int item) {
    if (item < 0 || item >= static_cast<int>(pool.items.size()))
      throw ConfigError("sequence model: item index out of range");
    return pool.items[static_cast<std::size_t>(item)].tokens;
  }

  TrainConfig cfg_;
  std::optional<SeqNet> net_;
};

class ExternalAdapter final : public ModelOracle {
 public:
  ExternalAdapter(Matrix proba, Matrix embed, std::vector<int> ids)
      : proba_(ProbMatrix::from(std::move(proba))),
        embed_(std::move(embed)),
        ids_(std::move(ids)) {
    if (proba_.rows() != embed_.rows() || proba_.rows() != ids_.size())
      throw ConfigError("external adapter: rows misaligned with ids (" +
                        std::to_string(proba_.rows()) + " proba, " +
                        std::to_string(embed_.rows()) + " embed, " +
                        std::to_string(ids_.size()) + " ids)");
    if (!embed_.all_finite())
      throw ConfigError("external adapter: non-finite embedding entry");
    for (std::size_t i = 0; i < ids_.size(); ++i)
      if (!index_.emplace(ids_[i], i).second)
        throw ConfigError("external adapter: duplicate item id " +
                          std::to_string(ids_[i]));
  }

  std::string id() const override { return "external"; }
  bool supports(TaskKind task) const override {
    return task == TaskKind::classification;
  }
  bool is_trained() const override { return true; }

  void train(const Pool&, std::span<const int>, Rng&) override {
    warn("external adapter: train is a no-op");
  }

  ProbMatrix predict_proba(const Pool&,
                           std::span<const int> items) const override {
    Matrix out(items.size(), proba_.cols());
    for (std::size_t r = 0; r < items.size(); ++r) {
      auto row = proba_.row(resolve(items[r]));
      for (std::size_t c = 0; c < row.size(); ++c) out.at(r, c) = row[c];
    }
    return ProbMatrix::from(std::move(out));
  }

  Matrix embed(const Pool&, std::span<const int> items) const override {
    Matrix out(items.size(), embed_.cols());
    for (std::size_t r = 0; r < items.size(); ++r) {
      auto row = embed_.row(resolve(items[r]));
      for (std::size_t c = 0; c < row.size(); ++c) out.at(r, c) = row[c];
    }
    return out;
  }

 private:
  std::size_t resolve(int item) const {
    auto it = index_.find(item);
    if (it == index_.end())
      throw ConfigError("external adapter: no row for item id " +
                        std::to_string(item));
    return it->second;
  }

  ProbMatrix proba_;
  Matrix embed_;
  std::vector<int> ids_;
  std::unordered_map<int, std::size_t> index_;
};

}  // namespace

std::unique_ptr<ModelOracle> make_toy_classifier(TrainConfig cfg) {
  return std::make_unique<ToyClassifier>(cfg);
}

std::unique_ptr<ModelOracle> make_toy_seqmodel(TrainConfig cfg) {
  return std::make_unique<ToySeqModel>(cfg);
}

std::unique_ptr<ModelOracle> make_external_adapter(Matrix proba, Matrix embed,
                                                   std::vector<int> ids) {
  return std::make_unique<ExternalAdapter>(std::move(proba), std::move(embed),
                                           std::move(ids));
}

std::unique_ptr<ModelOracle> load_external_adapter(
    const std::string& proba_path, const std::string& embed_path,
    const std::string& ids_path) {
  Matrix proba = read_matrix_auto(proba_path);
  Matrix embed = read_matrix_auto(embed_path);
  std::vector<int> ids;
  if (ids_path.empty()) {
    ids.resize(proba.rows());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
  } else {
    std::ifstream in(ids_path, std::ios::binary);
    if (!in) throw IoError("cannot open " + ids_path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw IoError("malformed id map " + ids_path + ": " + e.what());
    }
    if (!j.is_array())
      throw IoError("id map " + ids_path + ": expected a JSON array");
    ids = j.get<std::vector<int>>();
  }
  return make_external_adapter(std::move(proba), std::move(embed),
                               std::move(ids));
}

}  // namespace alkit
