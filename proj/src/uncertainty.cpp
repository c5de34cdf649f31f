#include "alkit/uncertainty.hpp"

#include <algorithm>
#include <cmath>

namespace alkit {

ProbMatrix ProbMatrix::from(Matrix m) {
  if (m.rows() == 0 || m.cols() == 0)
    throw ConfigError("probability matrix: empty");
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) {
      double v = m.at(i, j);
      if (!std::isfinite(v) || v < 0.0)
        throw ConfigError("probability matrix: bad entry at row " +
                          std::to_string(i));
      sum += v;
    }
    if (std::fabs(sum - 1.0) > 1e-6)
      throw ConfigError("probability matrix: row " + std::to_string(i) +
                        " sums to " + std::to_string(sum));
  }
  return ProbMatrix{std::move(m)};
}

ProbStack ProbStack::from(std::vector<ProbMatrix> passes) {
  if (passes.size() < 2)
    throw ConfigError("probability stack: need at least 2 passes, got " +
                      std::to_string(passes.size()));
  for (const auto& p : passes)
    if (p.rows() != passes.front().rows() || p.cols() != passes.front().cols())
      throw ConfigError("probability stack: pass shape mismatch");
  return ProbStack{std::move(passes)};
}

namespace {

// Top two probabilities of a row without a full sort.
void top_two(std::span<const double> row, double& p1, double& p2) {
  p1 = -1.0;
  p2 = -1.0;
  for (double v : row) {
    if (v > p1) {
      p2 = p1;
      p1 = v;
    } else if (v > p2) {
      p2 = v;
    }
  }
}

std::size_t argmax_row(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < row.size(); ++j)
    if (row[j] > row[best]) best = j;  // tie keeps the smaller label
  return best;
}

}  // namespace

std::vector<double> score_uncertainty(const ProbMatrix& probs,
                                      UncertaintyMethod method,
                                      EntropyDirection dir) {
  std::vector<double> scores(probs.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    auto row = probs.row(i);
    switch (method) {
      case UncertaintyMethod::lc: {
        double p1, p2;
        top_two(row, p1, p2);
        scores[i] = p1;
        break;
      }
      case UncertaintyMethod::margin: {
        if (row.size() < 2)
          throw ConfigError("margin: needs at least 2 classes");
        double p1, p2;
        top_two(row, p1, p2);
        scores[i] = p1 - p2;
        break;
      }
      case UncertaintyMethod::gini: {
        double s = 0.0;
        for (double v : row) s += v * v;
        scores[i] = s;
        break;
      }
      case UncertaintyMethod::entropy: {
        double h = 0.0;
        for (double v : row)
          if (v > 0.0) h -= v * std::log(v);
        scores[i] = dir == EntropyDirection::select_max_entropy ? -h : h;
        break;
      }
    }
  }
  return scores;
}

std::vector<double> score_bald(const ProbStack& stack) {
  const std::size_t n = stack.items();
  const std::size_t t = stack.size();
  const std::size_t c = stack.passes.front().cols();
  std::vector<double> scores(n);
  std::vector<int> votes(c);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(votes.begin(), votes.end(), 0);
    for (std::size_t pass = 0; pass < t; ++pass)
      ++votes[argmax_row(stack.passes[pass].row(i))];
    int best = votes[0];
    for (std::size_t j = 1; j < c; ++j)
      if (votes[j] > best) best = votes[j];
    scores[i] = static_cast<double>(best) / static_cast<double>(t);
  }
  return scores;
}

double kl_divergence_floored(std::span<const double> p,
                             std::span<const double> q, double floor) {
  if (p.size() != q.size())
    throw ConfigError("kl divergence: length mismatch");
  if (p.empty()) throw ConfigError("kl divergence: empty input");
  double kl = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    double pj = std::max(p[j], floor);
    double qj = std::max(q[j], floor);
    kl += pj * std::log(pj / qj);
  }
  return kl;
}

std::vector<double> score_cal(const ProbMatrix& cand_probs,
                              const FeatureView& cand_feats,
                              const ProbMatrix& labeled_probs,
                              const FeatureView& labeled_feats, int k) {
  if (k < 1) throw ConfigError("cal: k must be >= 1");
  if (cand_probs.rows() != cand_feats.m.rows())
    throw ConfigError("cal: candidate probs/features row mismatch");
  if (labeled_probs.rows() != labeled_feats.m.rows())
    throw ConfigError("cal: labeled probs/features row mismatch");
  if (static_cast<std::size_t>(k) > labeled_feats.m.rows())
    throw ConfigError("cal: k " + std::to_string(k) + " exceeds " +
                      std::to_string(labeled_feats.m.rows()) +
                      " labeled items");
  if (cand_feats.m.cols() != labeled_feats.m.cols())
    throw ConfigError("cal: feature dimension mismatch");
  if (cand_probs.cols() != labeled_probs.cols())
    throw ConfigError("cal: class count mismatch");

  const std::size_t use_k = static_cast<std::size_t>(k);
  const std::size_t d = cand_feats.m.cols();

  std::vector<double> scores(cand_probs.rows());
  std::vector<std::pair<double, std::size_t>> dist(labeled_feats.m.rows());
  for (std::size_t i = 0; i < cand_probs.rows(); ++i) {
    auto ci = cand_feats.m.row(i);
    for (std::size_t l = 0; l < labeled_feats.m.rows(); ++l) {
      auto li = labeled_feats.m.row(l);
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        double diff = ci[j] - li[j];
        s += diff * diff;
      }
      dist[l] = {s, l};
    }
    std::partial_sort(dist.begin(), dist.begin() + use_k, dist.end());
    double divergence = 0.0;
    for (std::size_t r = 0; r < use_k; ++r)
      divergence +=
          kl_divergence_floored(cand_probs.row(i),
                                labeled_probs.row(dist[r].second));
    divergence /= static_cast<double>(use_k);
    scores[i] = -divergence;  // ascending = most contrastive first
  }
  return scores;
}

}  // namespace alkit
