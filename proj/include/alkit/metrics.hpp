#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "alkit/common.hpp"

namespace alkit {

enum class MetricId { accuracy, f1, perplexity, bleu };
enum class Direction { higher_better, lower_better };

struct MetricValue {
  MetricId id;
  double value;
  Direction direction;
};

Direction direction_of(MetricId id);
std::string to_string(MetricId id);
MetricId metric_from_string(const std::string& s);

// Fraction of positions where prediction equals label.
double accuracy(std::span<const int> predictions, std::span<const int> labels);

// tp / (tp + (fp + fn)/2). Symmetric in fp and fn.
double f1_score(long long tp, long long fp, long long fn_);

// exp of the negative mean log-likelihood. Log-likelihoods are natural logs
// and must be <= 0.
double perplexity(std::span<const double> token_loglik);

// Per-sequence n-gram count table; build once per sequence when scoring many
// pairs so each pair costs only a count intersection.
struct NgramProfile {
  int length = 0;
  int max_n = 4;
  // counts[n-1] maps the packed byte encoding of an n-gram to its count.
  std::vector<std::unordered_map<std::string, int>> counts;

  static NgramProfile build(std::span<const int> seq, int max_n = 4);
};

// Sentence BLEU with clipped modified precisions, uniform weights over the
// effective order N = min(max_n, |candidate|, |reference|), brevity penalty
// exp(1 - r/c) for c <= r, and zero precisions smoothed to eps/total with
// eps = 1e-9.
double bleu(std::span<const int> candidate, std::span<const int> reference,
            int max_n = 4);
double bleu(const NgramProfile& candidate, const NgramProfile& reference);

}  // namespace alkit
