#include "alkit/distance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "alkit/io.hpp"
#include "alkit/rng.hpp"

namespace alkit {

double euclidean(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw ConfigError("euclidean: dimension mismatch " +
                      std::to_string(a.size()) + " vs " +
                      std::to_string(b.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double cosine_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw ConfigError("cosine_distance: dimension mismatch " +
                      std::to_string(a.size()) + " vs " +
                      std::to_string(b.size()));
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw ConfigError("zero-norm vector");
  return std::clamp(1.0 - dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 2.0);
}

double bleu_distance(std::span<const int> a, std::span<const int> b,
                     int max_n) {
  return bleu_distance(NgramProfile::build(a, max_n),
                       NgramProfile::build(b, max_n));
}

double bleu_distance(const NgramProfile& a, const NgramProfile& b) {
  return 1.0 - (bleu(a, b) + bleu(b, a)) / 2.0;
}

void TokenEmbeddingTable::validate() const {
  if (table.rows() == 0 || table.cols() == 0)
    throw ConfigError("embedding table: empty");
  if (!table.all_finite())
    throw ConfigError("embedding table: non-finite entry");
}

TokenEmbeddingTable random_embedding_table(std::size_t vocab_size,
                                           std::size_t dim,
                                           std::uint64_t seed) {
  if (vocab_size == 0 || dim == 0)
    throw ConfigError("embedding table: empty shape");
  Rng rng(seed);
  Matrix t(vocab_size, dim);
  for (std::size_t i = 0; i < vocab_size; ++i)
    for (std::size_t j = 0; j < dim; ++j)
      t.at(i, j) = 2.0 * rng.uniform() - 1.0;
  TokenEmbeddingTable out{std::move(t)};
  out.validate();
  return out;
}

namespace {

// One unit-normalized row per token; zero-norm embeddings stay all-zero so
// they contribute similarity 0 downstream.
Matrix unit_token_rows(std::span<const int> seq,
                       const TokenEmbeddingTable& table) {
  Matrix out(seq.size(), table.dim());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const int t = seq[i];
    if (t < 0 || static_cast<std::size_t>(t) >= table.vocab_size())
      throw ConfigError("greedy_match: token " + std::to_string(t) +
                        " out of table range [0, " +
                        std::to_string(table.vocab_size()) + ")");
    auto row = table.table.row(static_cast<std::size_t>(t));
    double norm = 0.0;
    for (double v : row) norm += v * v;
    norm = std::sqrt(norm);
    for (std::size_t j = 0; j < row.size(); ++j)
      out.at(i, j) = norm == 0.0 ? 0.0 : row[j] / norm;
  }
  return out;
}

GreedyMatchScore greedy_match_from_units(const Matrix& ua, const Matrix& ub) {
  const std::size_t la = ua.rows(), lb = ub.rows(), d = ua.cols();
  std::vector<double> col_max(lb, -2.0);
  double p_sum = 0.0;
  for (std::size_t i = 0; i < la; ++i) {
    auto ra = ua.row(i);
    double row_max = -2.0;
    for (std::size_t j = 0; j < lb; ++j) {
      auto rb = ub.row(j);
      double dot = 0.0;
      for (std::size_t k = 0; k < d; ++k) dot += ra[k] * rb[k];
      row_max = std::max(row_max, dot);
      col_max[j] = std::max(col_max[j], dot);
    }
    p_sum += row_max;
  }
  GreedyMatchScore s;
  s.precision = p_sum / static_cast<double>(la);
  s.recall = 0.0;
  for (double v : col_max) s.recall += v;
  s.recall /= static_cast<double>(lb);
  const double denom = s.precision + s.recall;
  s.f = std::fabs(denom) < 1e-300 ? 0.0
                                  : 2.0 * s.precision * s.recall / denom;
  return s;
}

std::unordered_map<int, std::size_t> build_index(const std::vector<int>& ids) {
  std::unordered_map<int, std::size_t> index;
  index.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (!index.emplace(ids[i], i).second)
      throw ConfigError("distance source: duplicate item id " +
                        std::to_string(ids[i]));
  return index;
}

std::size_t resolve(const std::unordered_map<int, std::size_t>& index,
                    int id) {
  auto it = index.find(id);
  if (it == index.end())
    throw ConfigError("distance source: unknown item id " +
                      std::to_string(id));
  return it->second;
}

std::vector<int> identity_ids(std::size_t n) {
  std::vector<int> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<int>(i);
  return ids;
}

void check_rows(const Matrix& rows, const std::vector<int>& ids) {
  if (rows.rows() < 1) throw ConfigError("distance source: no items");
  if (ids.size() != rows.rows())
    throw ConfigError("distance source: ids out of sync with rows");
  if (!rows.all_finite())
    throw ConfigError("distance source: non-finite feature entry");
}

}  // namespace

double DistanceSource::seed_weight(int id) const {
  double total = 0.0;
  for (int other : ids())
    if (other != id) total += dist(id, other);
  return total;
}

namespace {

double row_norm(const Matrix& rows, std::size_t r) {
  double s = 0.0;
  for (double v : rows.row(r)) s += v * v;
  return std::sqrt(s);
}

}  // namespace

GreedyMatchScore greedy_match_similarity(std::span<const int> a,
                                         std::span<const int> b,
                                         const TokenEmbeddingTable& table) {
  if (a.empty() || b.empty())
    throw ConfigError("greedy_match: empty sequence");
  table.validate();
  return greedy_match_from_units(unit_token_rows(a, table),
                                 unit_token_rows(b, table));
}

double greedy_match_distance(std::span<const int> a, std::span<const int> b,
                             const TokenEmbeddingTable& table) {
  return std::max(0.0, 1.0 - greedy_match_similarity(a, b, table).f);
}

EuclideanSource::EuclideanSource(Matrix rows, std::vector<int> ids)
    : rows_(std::move(rows)),
      ids_(ids.empty() ? identity_ids(rows_.rows()) : std::move(ids)) {
  check_rows(rows_, ids_);
  index_ = build_index(ids_);
}

EuclideanSource::EuclideanSource(const FeatureView& view)
    : EuclideanSource(view.m, view.item_ids) {}

double EuclideanSource::dist(int a, int b) const {
  return euclidean(rows_.row(resolve(index_, a)),
                   rows_.row(resolve(index_, b)));
}

double EuclideanSource::seed_weight(int id) const {
  return row_norm(rows_, resolve(index_, id));
}

CosineSource::CosineSource(Matrix rows, std::vector<int> ids)
    : rows_(std::move(rows)),
      ids_(ids.empty() ? identity_ids(rows_.rows()) : std::move(ids)) {
  check_rows(rows_, ids_);
  index_ = build_index(ids_);
}

CosineSource::CosineSource(const FeatureView& view)
    : CosineSource(view.m, view.item_ids) {}

double CosineSource::dist(int a, int b) const {
  return cosine_distance(rows_.row(resolve(index_, a)),
                         rows_.row(resolve(index_, b)));
}

double CosineSource::seed_weight(int id) const {
  return row_norm(rows_, resolve(index_, id));
}

BleuSource::BleuSource(std::vector<std::vector<int>> seqs,
                       std::vector<int> ids, int max_n)
    : ids_(ids.empty() ? identity_ids(seqs.size()) : std::move(ids)) {
  if (seqs.empty()) throw ConfigError("distance source: no items");
  if (ids_.size() != seqs.size())
    throw ConfigError("distance source: ids out of sync with rows");
  if (max_n < 1) throw ConfigError("bleu source: max_n must be >= 1");
  profiles_.reserve(seqs.size());
  for (const auto& s : seqs) {
    if (s.empty()) throw ConfigError("bleu source: empty sequence");
    profiles_.push_back(NgramProfile::build(s, max_n));
  }
  index_ = build_index(ids_);
}

double BleuSource::dist(int a, int b) const {
  const std::size_t ia = resolve(index_, a), ib = resolve(index_, b);
  if (ia == ib) return 0.0;
  return bleu_distance(profiles_[ia], profiles_[ib]);
}

GreedyMatchSource::GreedyMatchSource(std::vector<std::vector<int>> seqs,
                                     std::vector<int> ids,
                                     TokenEmbeddingTable table)
    : ids_(ids.empty() ? identity_ids(seqs.size()) : std::move(ids)) {
  if (seqs.empty()) throw ConfigError("distance source: no items");
  if (ids_.size() != seqs.size())
    throw ConfigError("distance source: ids out of sync with rows");
  table.validate();
  unit_rows_.reserve(seqs.size());
  for (const auto& s : seqs) {
    if (s.empty()) throw ConfigError("greedy_match: empty sequence");
    unit_rows_.push_back(unit_token_rows(s, table));
  }
  index_ = build_index(ids_);
}

double GreedyMatchSource::dist(int a, int b) const {
  const std::size_t ia = resolve(index_, a), ib = resolve(index_, b);
  if (ia == ib) return 0.0;
  return std::max(
      0.0, 1.0 - greedy_match_from_units(unit_rows_[ia], unit_rows_[ib]).f);
}

void DistanceMatrix::validate() const {
  const std::size_t n = d.rows();
  if (n == 0 || d.cols() != n)
    throw ConfigError("distance matrix: not square");
  if (ids.size() != n)
    throw ConfigError("distance matrix: ids out of sync with rows");
  for (std::size_t i = 0; i < n; ++i) {
    if (d.at(i, i) != 0.0)
      throw ConfigError("distance matrix: nonzero diagonal at row " +
                        std::to_string(i));
    for (std::size_t j = 0; j < n; ++j) {
      const double v = d.at(i, j);
      if (!std::isfinite(v) || v < 0.0)
        throw ConfigError("distance matrix: bad entry at (" +
                          std::to_string(i) + ", " + std::to_string(j) + ")");
      if (std::fabs(v - d.at(j, i)) > 1e-9)
        throw ConfigError("distance matrix: asymmetric at (" +
                          std::to_string(i) + ", " + std::to_string(j) + ")");
    }
  }
}

PrecomputedSource::PrecomputedSource(DistanceMatrix dm) : dm_(std::move(dm)) {
  dm_.validate();
  index_ = build_index(dm_.ids);
}

double PrecomputedSource::dist(int a, int b) const {
  return dm_.d.at(resolve(index_, a), resolve(index_, b));
}

DistanceMatrix pairwise_matrix(const DistanceSource& source, int workers,
                               std::optional<SubsampleSpec> subsample) {
  std::vector<int> ids = source.ids();
  bool subsampled = false;
  if (subsample) {
    const int n_all = static_cast<int>(ids.size());
    if (subsample->count < 2 || subsample->count > n_all)
      throw ConfigError("pairwise_matrix: subsample count " +
                        std::to_string(subsample->count) +
                        " out of range [2, " + std::to_string(n_all) + "]");
    Rng rng(subsample->seed);
    auto pick = rng.sample_without_replacement(n_all, subsample->count);
    std::sort(pick.begin(), pick.end());
    std::vector<int> kept;
    kept.reserve(pick.size());
    for (int p : pick) kept.push_back(ids[static_cast<std::size_t>(p)]);
    ids = std::move(kept);
    subsampled = true;
  }

  const std::size_t n = ids.size();
  if (n < 2) throw ConfigError("pairwise_matrix: need at least 2 items");

  DistanceMatrix out;
  out.d = Matrix(n, n, 0.0);
  out.metric = source.metric();
  out.ids = ids;
  out.subsampled = subsampled;

  // Upper-triangle pairs in row-major order; each worker owns a contiguous
  // block of pair indices, so writes never overlap and the result cannot
  // depend on scheduling.
  const std::size_t total = n * (n - 1) / 2;
  auto row_offset = [n](std::size_t i) { return i * n - i * (i + 1) / 2; };
  Matrix& d = out.d;
  parallel_for(total, workers, [&](std::size_t lo, std::size_t hi) {
    std::size_t i_lo = 0, i_hi = n - 1;
    while (i_lo < i_hi) {  // largest i with row_offset(i) <= lo
      const std::size_t mid = (i_lo + i_hi + 1) / 2;
      if (row_offset(mid) <= lo)
        i_lo = mid;
      else
        i_hi = mid - 1;
    }
    std::size_t i = i_lo;
    std::size_t j = i + 1 + (lo - row_offset(i));
    for (std::size_t k = lo; k < hi; ++k) {
      const double v = source.dist(ids[i], ids[j]);
      d.at(i, j) = v;
      d.at(j, i) = v;
      if (++j == n) {
        ++i;
        j = i + 1;
      }
    }
  });

  out.validate();
  return out;
}

std::unique_ptr<DistanceSource> make_vector_source(const std::string& metric,
                                                   Matrix rows,
                                                   std::vector<int> ids) {
  if (metric == "euclidean")
    return std::make_unique<EuclideanSource>(std::move(rows), std::move(ids));
  if (metric == "cosine")
    return std::make_unique<CosineSource>(std::move(rows), std::move(ids));
  if (metric == "bleu" || metric == "greedy_match")
    throw ConfigError("metric " + metric +
                      " requires token sequences, got feature vectors");
  throw ConfigError("unknown distance metric: " + metric);
}

std::unique_ptr<DistanceSource> make_sequence_source(
    const std::string& metric, std::vector<std::vector<int>> seqs,
    std::vector<int> ids, const TokenEmbeddingTable* table, int max_n) {
  if (metric == "bleu")
    return std::make_unique<BleuSource>(std::move(seqs), std::move(ids),
                                        max_n);
  if (metric == "greedy_match") {
    if (!table)
      throw ConfigError("metric greedy_match requires an embedding table");
    return std::make_unique<GreedyMatchSource>(std::move(seqs),
                                               std::move(ids), *table);
  }
  if (metric == "euclidean" || metric == "cosine")
    throw ConfigError("metric " + metric +
                      " requires feature vectors, got token sequences");
  throw ConfigError("unknown distance metric: " + metric);
}

void save_distance_matrix(const DistanceMatrix& dm, const std::string& path,
                          const std::string& sidecar_path) {
  dm.validate();
  write_alfv(dm.d, path);
  nlohmann::json j;
  j["metric"] = dm.metric;
  j["n"] = dm.d.rows();
  j["ids"] = dm.ids;
  j["subsampled"] = dm.subsampled;
  std::ofstream out(sidecar_path, std::ios::binary);
  if (!out) throw IoError("cannot open " + sidecar_path + " for writing");
  out << j.dump(2) << "\n";
  if (!out) throw IoError("failed writing " + sidecar_path);
}

DistanceMatrix load_distance_matrix(const std::string& path,
                                    const std::string& sidecar_path) {
  DistanceMatrix dm;
  dm.d = read_alfv(path);
  std::ifstream in(sidecar_path, std::ios::binary);
  if (!in) throw IoError("cannot open " + sidecar_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed sidecar " + sidecar_path + ": " + e.what());
  }
  if (!j.contains("metric") || !j["metric"].is_string())
    throw IoError("sidecar " + sidecar_path + ": missing metric");
  dm.metric = j["metric"].get<std::string>();
  if (j.contains("ids"))
    dm.ids = j["ids"].get<std::vector<int>>();
  else
    dm.ids = identity_ids(dm.d.rows());
  dm.subsampled = j.value("subsampled", false);
  dm.validate();
  return dm;
}

}  // namespace alkit
