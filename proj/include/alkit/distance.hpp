#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "alkit/common.hpp"
#include "alkit/feature.hpp"
#include "alkit/matrix.hpp"
#include "alkit/metrics.hpp"

namespace alkit {

// L2 norm of a - b. Dimensions must agree.
double euclidean(std::span<const double> a, std::span<const double> b);

// 1 - (a.b)/(|a||b|), clamped to [0, 2]. Zero-norm inputs are an error.
double cosine_distance(std::span<const double> a, std::span<const double> b);

// 1 - (bleu(a,b) + bleu(b,a))/2. Raw BLEU is asymmetric; averaging the two
// directions yields a symmetric kernel with zero self-distance.
double bleu_distance(std::span<const int> a, std::span<const int> b,
                     int max_n = 4);
double bleu_distance(const NgramProfile& a, const NgramProfile& b);

// One static embedding per token id, vocab_size x e.
struct TokenEmbeddingTable {
  Matrix table;

  void validate() const;
  std::size_t vocab_size() const { return table.rows(); }
  std::size_t dim() const { return table.cols(); }
};

// Seeded random table, entries uniform in [-1, 1). Stand-in embedder when no
// trained table is available.
TokenEmbeddingTable random_embedding_table(std::size_t vocab_size,
                                           std::size_t dim,
                                           std::uint64_t seed);

struct GreedyMatchScore {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

// Embed every token of both sequences, form the cosine-similarity grid
// S[i][j], then: precision = mean over i of max_j S, recall = mean over j of
// max_i S, f = harmonic mean (0 when precision + recall vanishes). Zero-norm
// embeddings contribute similarity 0 rather than an error.
GreedyMatchScore greedy_match_similarity(std::span<const int> a,
                                         std::span<const int> b,
                                         const TokenEmbeddingTable& table);

// 1 - f, floored at 0 so it always qualifies as a distance entry.
double greedy_match_distance(std::span<const int> a, std::span<const int> b,
                             const TokenEmbeddingTable& table);

// Pair-distance interface over a fixed item universe addressed by item id.
// Implementations cache per-item state (n-gram tables, normalized token
// embeddings) so each pair costs only the combination step.
class DistanceSource {
 public:
  virtual ~DistanceSource() = default;

  // Distance between two universe items; both ids must be known.
  virtual double dist(int a, int b) const = 0;
  virtual std::size_t size() const = 0;
  virtual const std::vector<int>& ids() const = 0;
  virtual const std::string& metric() const = 0;

  // Ranking weight for the first greedy pick when no labeled items exist:
  // vector sources use the row L2 norm, everything else the total distance
  // to the rest of the universe.
  virtual double seed_weight(int id) const;
};

class EuclideanSource final : public DistanceSource {
 public:
  EuclideanSource(Matrix rows, std::vector<int> ids);
  explicit EuclideanSource(const FeatureView& view);

  double dist(int a, int b) const override;
  double seed_weight(int id) const override;
  std::size_t size() const override { return rows_.rows(); }
  const std::vector<int>& ids() const override { return ids_; }
  const std::string& metric() const override { return metric_; }

 private:
  Matrix rows_;
  std::vector<int> ids_;
  std::unordered_map<int, std::size_t> index_;
  std::string metric_ = "euclidean";
};

class CosineSource final : public DistanceSource {
 public:
  CosineSource(Matrix rows, std::vector<int> ids);
  explicit CosineSource(const FeatureView& view);

  double dist(int a, int b) const override;
  double seed_weight(int id) const override;
  std::size_t size() const override { return rows_.rows(); }
  const std::vector<int>& ids() const override { return ids_; }
  const std::string& metric() const override { return metric_; }

 private:
  Matrix rows_;
  std::vector<int> ids_;
  std::unordered_map<int, std::size_t> index_;
  std::string metric_ = "cosine";
};

class BleuSource final : public DistanceSource {
 public:
  BleuSource(std::vector<std::vector<int>> seqs, std::vector<int> ids,
             int max_n = 4);

  double dist(int a, int b) const override;
  std::size_t size() const override { return profiles_.size(); }
  const std::vector<int>& ids() const override { return ids_; }
  const std::string& metric() const override { return metric_; }

 private:
  std::vector<NgramProfile> profiles_;
  std::vector<int> ids_;
  std::unordered_map<int, std::size_t> index_;
  std::string metric_ = "bleu";
};

class GreedyMatchSource final : public DistanceSource {
 public:
  GreedyMatchSource(std::vector<std::vector<int>> seqs, std::vector<int> ids,
                    TokenEmbeddingTable table);

  double dist(int a, int b) const override;
  std::size_t size() const override { return unit_rows_.size(); }
  const std::vector<int>& ids() const override { return ids_; }
  const std::string& metric() const override { return metric_; }

 private:
  // Per item: one unit-normalized embedding row per token (zero rows kept
  // zero), so the similarity grid is a plain dot product.
  std::vector<Matrix> unit_rows_;
  std::vector<int> ids_;
  std::unordered_map<int, std::size_t> index_;
  std::string metric_ = "greedy_match";
};

// Symmetric distance matrix with the item ids backing each row. `subsampled`
// marks matrices computed on a seeded subset of a larger universe.
struct DistanceMatrix {
  Matrix d;
  std::string metric;
  std::vector<int> ids;
  bool subsampled = false;

  // Square; symmetric within 1e-9; zero diagonal; entries >= 0 and finite;
  // ids in sync with rows.
  void validate() const;
};

class PrecomputedSource final : public DistanceSource {
 public:
  explicit PrecomputedSource(DistanceMatrix dm);

  double dist(int a, int b) const override;
  std::size_t size() const override { return dm_.d.rows(); }
  const std::vector<int>& ids() const override { return dm_.ids; }
  const std::string& metric() const override { return dm_.metric; }

 private:
  DistanceMatrix dm_;
  std::unordered_map<int, std::size_t> index_;
};

struct SubsampleSpec {
  int count = 0;
  std::uint64_t seed = 0;
};

// Full symmetric matrix over the source universe (or a seeded uniform subset
// of it). Only the upper triangle is evaluated; pair blocks are handed to
// workers writing disjoint regions, so the result is bitwise independent of
// the worker count.
DistanceMatrix pairwise_matrix(const DistanceSource& source, int workers = 1,
                               std::optional<SubsampleSpec> subsample = {});

// Factories keyed by metric id; unknown ids and metric/item mismatches are
// config errors. Vector metrics: euclidean, cosine. Sequence metrics: bleu,
// greedy_match (needs a table).
std::unique_ptr<DistanceSource> make_vector_source(const std::string& metric,
                                                   Matrix rows,
                                                   std::vector<int> ids);
std::unique_ptr<DistanceSource> make_sequence_source(
    const std::string& metric, std::vector<std::vector<int>> seqs,
    std::vector<int> ids, const TokenEmbeddingTable* table = nullptr,
    int max_n = 4);

// ALFV payload plus a JSON sidecar carrying metric id, ids, and the
// subsample flag.
void save_distance_matrix(const DistanceMatrix& dm, const std::string& path,
                          const std::string& sidecar_path);
DistanceMatrix load_distance_matrix(const std::string& path,
                                    const std::string& sidecar_path);

}  // namespace alkit
