#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "alkit/common.hpp"
#include "alkit/feature.hpp"
#include "alkit/matrix.hpp"

namespace alkit {

// Row-stochastic matrix: every row is a probability vector over the same
// class set. `from` validates (entries >= 0, rows sum to 1 within 1e-6) so
// downstream scorers can assume well-formed input.
struct ProbMatrix {
  Matrix p;

  static ProbMatrix from(Matrix m);

  std::size_t rows() const { return p.rows(); }
  std::size_t cols() const { return p.cols(); }
  std::span<const double> row(std::size_t i) const { return p.row(i); }
};

// T stochastic forward passes over the same items: passes[t] has identical
// shape for all t, and T >= 2 (one pass carries no disagreement signal).
struct ProbStack {
  std::vector<ProbMatrix> passes;

  static ProbStack from(std::vector<ProbMatrix> passes);

  std::size_t size() const { return passes.size(); }
  std::size_t items() const { return passes.front().rows(); }
};

enum class UncertaintyMethod { lc, margin, entropy, gini };

// Entropy can rank either extreme first; every other method has a fixed
// orientation.
enum class EntropyDirection { select_max_entropy, select_min_entropy };

// Per-row acquisition scores, ascending = picked first:
//   lc      top-1 probability (low confidence first)
//   margin  gap between top-1 and top-2 (narrow margin first)
//   gini    sum of squared probabilities (impure rows first)
//   entropy -H(p) by default, +H(p) under select_min_entropy; 0*log 0 := 0
std::vector<double> score_uncertainty(
    const ProbMatrix& probs, UncertaintyMethod method,
    EntropyDirection dir = EntropyDirection::select_max_entropy);

// Modal agreement across stochastic passes: per item, take the argmax label
// of each pass and score count(modal label) / T. Ascending = least agreement
// first. Argmax and mode ties both resolve to the smaller label.
std::vector<double> score_bald(const ProbStack& stack);

// KL(p || q) with both distributions floored at `floor` before the log, so
// zero entries cannot produce inf/NaN. Inputs must be equal-length.
double kl_divergence_floored(std::span<const double> p,
                             std::span<const double> q, double floor = 1e-12);

// Contrastive scores: for each candidate, find its k nearest labeled
// neighbors in feature space (Euclidean, ties by smaller row index) and
// average KL(candidate probs || neighbor probs). Returns the negated
// average so ascending = most divergent first. Requires k >= 1 and at
// least k labeled items.
std::vector<double> score_cal(const ProbMatrix& cand_probs,
                              const FeatureView& cand_feats,
                              const ProbMatrix& labeled_probs,
                              const FeatureView& labeled_feats, int k = 10);

}  // namespace alkit
