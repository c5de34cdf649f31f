#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "alkit/clustering.hpp"
#include "alkit/feature.hpp"
#include "alkit/metrics.hpp"
#include "alkit/models.hpp"
#include "alkit/pool.hpp"
#include "alkit/rng.hpp"
#include "alkit/selection.hpp"

namespace alkit {

inline constexpr const char* kVersion = "0.1.0";

enum class Method {
  random,
  lc,
  margin,
  entropy,
  gini,
  bald,
  cal,
  kmeans,
  kcenter,
  badge,
  coreset
};

std::string to_string(Method m);
// Accepts the short aliases used in experiment tables (km, kc-c, badge-c,
// deepgini, ...).
Method method_from_string(const std::string& s);

// Methods that rank by the model's class-probability output; they require a
// classification task.
bool is_uncertainty_method(Method m);

struct MethodSpec {
  Method method = Method::random;
  FeatureKind feature = FeatureKind::output;
  // When set, `feature` is ignored and the per-task default binding applies
  // (kmeans: output for classification, token otherwise; kcenter: embedding
  // for classification, output otherwise; badge/coreset: output; cal:
  // embedding).
  bool feature_is_auto = true;
  int bald_passes = 20;
  int cal_k = 10;
  EntropyDirection entropy_direction = EntropyDirection::select_max_entropy;
  std::optional<double> coreset_outlier_bound;
  // euclidean/cosine run on the resolved feature view; bleu/greedy_match
  // switch the greedy steps to the sequence metric while the initial
  // distances to the labeled set stay euclidean-on-embeddings.
  std::string coreset_step_metric = "euclidean";
  std::string label;  // row label in logs; defaults to the method id

  std::string effective_label() const;
};

FeatureKind resolve_feature(Method m, FeatureKind requested, bool is_auto,
                            TaskKind task);

enum class ModelKind { classifier, seqmodel, external };

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

struct RunConfig {
  int init_size = 500;
  double round_fraction = 0.01;
  int rounds = 10;
  std::uint64_t seed = 0;
  MethodSpec acquisition;
  ModelKind model_kind = ModelKind::classifier;
  TrainConfig train;
  std::vector<MetricId> metrics;
  int workers = 1;
  // Required for ModelKind::external; otherwise built from model_kind.
  std::shared_ptr<ModelOracle> model;

  // init_size + rounds * per-round budget must fit in the train split, the
  // model kind must match the task, and every metric must be computable for
  // it. Uncertainty methods on non-classification tasks are a capability
  // error.
  void validate(const Pool& pool) const;
  long long round_budget(const Pool& pool) const;
};

struct RoundRecord {
  int round = 0;
  int labeled_count = 0;
  std::vector<int> selected_ids;  // in selection order
  double train_seconds = 0.0;     // wall time; serialized only to metadata
  std::vector<MetricValue> metrics;
};

struct RunLog {
  std::string version = kVersion;
  std::uint64_t seed = 0;
  std::string method_label;
  int train_size = 0;
  RunConfig cfg;
  std::vector<RoundRecord> rounds;
};

// One acquisition batch with the current model state; shared by the loop and
// the standalone select command.
Selection select_batch(const Pool& pool, const ModelOracle* model,
                       const MethodSpec& spec, std::span<const int> labeled,
                       std::span<const int> candidates, int budget, Rng& rng,
                       int workers, int pad_len = 256, int pad_id = 0);

// Round 0 trains on a uniform init_size sample; each later round scores the
// remaining candidates with the round's model, reveals the selected labels,
// retrains from scratch on everything labeled, and evaluates the test split.
// Deterministic given (pool, cfg).
RunLog run_active_learning(const Pool& pool, const RunConfig& cfg);

std::vector<MetricValue> evaluate_model(const Pool& pool,
                                        const ModelOracle& model,
                                        std::span<const int> test_items,
                                        std::span<const MetricId> metrics);

// CSV: header "round,labeled,<metric...>" in config order, one row per round.
std::string runlog_csv(const RunLog& log);
// Config snapshot plus per-round selected ids; byte-deterministic.
std::string runlog_sidecar_json(const RunLog& log);
// Wall times and the supplied timestamp; the only output that may differ
// between identical reruns.
std::string runlog_metadata_json(const RunLog& log,
                                 const std::string& timestamp);

struct ComparisonCell {
  double mean = 0.0;
  double stddev = 0.0;
  int n = 0;
  bool best = false;
  bool second = false;
};

struct ComparisonColumn {
  MetricId metric;
  double fraction = 0.0;  // labeled fraction of the train split
  int round = 0;
  int labeled = 0;
};

struct ComparisonTable {
  std::vector<std::string> methods;  // row labels, first-seen order
  std::vector<ComparisonColumn> columns;
  std::vector<std::vector<ComparisonCell>> cells;  // [method][column]
};

// Aggregates seed repeats per method label at the given labeled-fraction
// checkpoints (empty = final round only). Direction-aware best/second flags
// are set per column when at least two methods are present.
ComparisonTable compare_runs(const std::vector<RunLog>& logs,
                             const std::vector<double>& checkpoints = {});
std::string comparison_csv(const ComparisonTable& table);

}  // namespace alkit
