#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "alkit/distance.hpp"
#include "alkit/metrics.hpp"
#include "alkit/pool.hpp"
#include "alkit/simulate.hpp"

namespace alkit {

struct SpearmanResult {
  double rho = 0.0;
  double p = 1.0;  // two-sided
};

// Rank correlation with average ranks on ties; the tie-free path uses the
// integer d^2 formula so monotone inputs give exactly +-1. The p-value is the
// two-sided t approximation. Inputs must have equal length >= 3 and neither
// may be constant.
SpearmanResult spearman(std::span<const double> x, std::span<const double> y);

// Exact two-sided permutation p-value for |rho|; n <= 10 keeps the
// permutation count tractable.
double spearman_exact_p(std::span<const double> x, std::span<const double> y);

// Mean pairwise distance over the unordered pairs of `selected`; needs at
// least two items.
double diversity(std::span<const int> selected, const DistanceSource& source);

enum class Stage { early, late };

std::string to_string(Stage s);
Stage stage_from_string(const std::string& s);

struct StudyConfig {
  RunConfig run;  // pool/model/budget basis; acquisition is ignored
  int repeats = 100;
  std::vector<std::string> distance_methods;  // euclidean cosine bleu greedy_match
  Stage stage = Stage::early;
  MetricId metric = MetricId::accuracy;

  void validate(const Pool& pool) const;
};

struct CorrelationRow {
  std::string method;
  double rho = 0.0;
  double p = 1.0;
  int n = 0;
};

struct MethodPairRho {
  std::string a;
  std::string b;
  double rho = 0.0;
  double p = 1.0;
};

struct CorrelationReport {
  Stage stage = Stage::early;
  MetricId metric = MetricId::accuracy;
  int repeats = 0;
  // Performance values are oriented higher-better; lower-better metrics are
  // negated before correlating.
  std::vector<double> performance;
  std::map<std::string, std::vector<double>> diversity_vectors;
  std::vector<CorrelationRow> rows;    // one per distance method
  std::vector<MethodPairRho> pairs;    // between diversity vectors
};

// Hook for experiments that substitute the trained-model evaluation with a
// synthetic response; receives the drawn batch and the repeat index.
using PerformanceFn = std::function<double(const std::vector<int>&, int)>;

// Repeats many one-round random acquisitions from a fixed base labeled set,
// measures the resulting model quality per draw, and correlates it with each
// batch-diversity signal. Stage early trains on the batch alone; stage late
// trains on a 5%-of-train base plus the batch.
CorrelationReport run_correlation_study(const Pool& pool,
                                        const StudyConfig& cfg,
                                        const PerformanceFn& performance = {});

// Pairwise rank correlation between named diversity vectors, in input order.
std::vector<MethodPairRho> distance_method_correlation(
    const std::vector<std::pair<std::string, std::vector<double>>>& vectors);

std::string correlation_report_json(const CorrelationReport& report);
std::string correlation_rho_csv(const CorrelationReport& report);
std::string correlation_pairs_csv(const CorrelationReport& report);

}  // namespace alkit
