#include "alkit/simulate.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <limits>
#include <utility>

#include <json.hpp>

#include "alkit/distance.hpp"
#include "alkit/io.hpp"
#include "alkit/uncertainty.hpp"

namespace alkit {

namespace {

using nlohmann::json;

// Derived-stream tags. Round r trains with kTrainStream + r and acquires
// with kAcquireStream + r, so no stage ever shares generator state.
constexpr std::uint64_t kInitStream = 101;
constexpr std::uint64_t kTrainStream = 1000;
constexpr std::uint64_t kAcquireStream = 2000;

std::vector<int> sorted_copy(std::span<const int> v) {
  std::vector<int> out(v.begin(), v.end());
  std::sort(out.begin(), out.end());
  return out;
}

// Both inputs sorted and disjoint.
std::vector<int> sorted_union(std::span<const int> a, std::span<const int> b) {
  std::vector<int> out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

std::vector<int> sorted_minus(std::span<const int> a, std::span<const int> b) {
  std::vector<int> out;
  out.reserve(a.size());
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(),
                      std::back_inserter(out));
  return out;
}

UncertaintyMethod uncertainty_of(Method m) {
  switch (m) {
    case Method::lc:
      return UncertaintyMethod::lc;
    case Method::margin:
      return UncertaintyMethod::margin;
    case Method::entropy:
      return UncertaintyMethod::entropy;
    case Method::gini:
      return UncertaintyMethod::gini;
    default:
      throw ConfigError("not a probability-ranking method: " + to_string(m));
  }
}

json method_spec_json(const MethodSpec& s) {
  json j;
  j["method"] = to_string(s.method);
  j["feature"] = s.feature_is_auto ? "auto" : to_string(s.feature);
  j["bald_passes"] = s.bald_passes;
  j["cal_k"] = s.cal_k;
  j["entropy_direction"] =
      s.entropy_direction == EntropyDirection::select_max_entropy ? "max"
                                                                  : "min";
  if (s.coreset_outlier_bound)
    j["coreset_outlier_bound"] = *s.coreset_outlier_bound;
  else
    j["coreset_outlier_bound"] = nullptr;
  j["coreset_step_metric"] = s.coreset_step_metric;
  j["label"] = s.effective_label();
  return j;
}

json train_config_json(const TrainConfig& t) {
  json j;
  j["hidden_width"] = t.hidden_width;
  j["dropout_rate"] = t.dropout_rate;
  j["learning_rate"] = t.learning_rate;
  j["epochs"] = t.epochs;
  j["batch_size"] = t.batch_size;
  j["pad_len"] = t.pad_len;
  j["pad_id"] = t.pad_id;
  j["embed_dim"] = t.embed_dim;
  j["max_gen_len"] = t.max_gen_len;
  return j;
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::random:
      return "random";
    case Method::lc:
      return "lc";
    case Method::margin:
      return "margin";
    case Method::entropy:
      return "entropy";
    case Method::gini:
      return "gini";
    case Method::bald:
      return "bald";
    case Method::cal:
      return "cal";
    case Method::kmeans:
      return "kmeans";
    case Method::kcenter:
      return "kcenter";
    case Method::badge:
      return "badge";
    case Method::coreset:
      return "coreset";
  }
  throw ConfigError("unknown acquisition method");
}

Method method_from_string(const std::string& s) {
  std::string k;
  k.reserve(s.size());
  for (char c : s)
    k.push_back(static_cast<char>(
        std::tolower(static_cast<unsigned char>(c))));
  if (k == "random" || k == "rand") return Method::random;
  if (k == "lc" || k == "least_confidence" || k == "leastconfidence")
    return Method::lc;
  if (k == "margin") return Method::margin;
  if (k == "entropy" || k == "max_entropy") return Method::entropy;
  if (k == "gini" || k == "deepgini" || k == "deep_gini") return Method::gini;
  if (k == "bald") return Method::bald;
  if (k == "cal") return Method::cal;
  if (k == "kmeans" || k == "k-means" || k == "km" || k == "km-c" || k == "kmc")
    return Method::kmeans;
  if (k == "kcenter" || k == "k-center" || k == "kc" || k == "kc-c" ||
      k == "kcc")
    return Method::kcenter;
  if (k == "badge" || k == "badge-c") return Method::badge;
  if (k == "coreset" || k == "coreset-c" || k == "core-set")
    return Method::coreset;
  throw ConfigError("unknown acquisition method: " + s);
}

bool is_uncertainty_method(Method m) {
  switch (m) {
    case Method::lc:
    case Method::margin:
    case Method::entropy:
    case Method::gini:
    case Method::bald:
    case Method::cal:
      return true;
    default:
      return false;
  }
}

std::string MethodSpec::effective_label() const {
  return label.empty() ? to_string(method) : label;
}

FeatureKind resolve_feature(Method m, FeatureKind requested, bool is_auto,
                            TaskKind task) {
  if (!is_auto) return requested;
  const bool cls = task == TaskKind::classification;
  switch (m) {
    case Method::kmeans:
      return cls ? FeatureKind::output : FeatureKind::token;
    case Method::kcenter:
      return cls ? FeatureKind::embedding : FeatureKind::output;
    case Method::badge:
    case Method::coreset:
      return FeatureKind::output;
    case Method::cal:
      return FeatureKind::embedding;
    default:
      // Probability-ranking methods and random never read the view.
      return FeatureKind::output;
  }
}

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::classifier:
      return "classifier";
    case ModelKind::seqmodel:
      return "seqmodel";
    case ModelKind::external:
      return "external";
  }
  throw ConfigError("unknown model kind");
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "classifier" || s == "mlp") return ModelKind::classifier;
  if (s == "seqmodel" || s == "seq" || s == "sequence")
    return ModelKind::seqmodel;
  if (s == "external" || s == "adapter") return ModelKind::external;
  throw ConfigError("unknown model kind: " + s);
}

long long RunConfig::round_budget(const Pool& pool) const {
  long long train_count = 0;
  for (const auto& item : pool.items)
    if (item.split == Split::train) ++train_count;
  return ceil_fraction(round_fraction, train_count);
}

void RunConfig::validate(const Pool& pool) const {
  train.validate();
  if (init_size < 1) throw ConfigError("run: init_size must be >= 1");
  if (!(round_fraction > 0.0) || round_fraction > 1.0)
    throw ConfigError("run: round_fraction must be in (0, 1]");
  if (rounds < 1) throw ConfigError("run: rounds must be >= 1");
  if (workers < 1) throw ConfigError("run: workers must be >= 1");
  if (metrics.empty()) throw ConfigError("run: no metrics configured");

  long long train_count = 0;
  for (const auto& item : pool.items)
    if (item.split == Split::train) ++train_count;
  const long long budget = ceil_fraction(round_fraction, train_count);
  if (init_size + rounds * budget > train_count)
    throw ConfigError(
        "run: init_size " + std::to_string(init_size) + " + " +
        std::to_string(rounds) + " rounds * budget " + std::to_string(budget) +
        " exceeds the train split of " + std::to_string(train_count));

  switch (model_kind) {
    case ModelKind::classifier:
      if (pool.task != TaskKind::classification)
        throw CapabilityError(
            "run: classifier model requires a classification pool");
      break;
    case ModelKind::seqmodel:
      if (pool.task != TaskKind::sequence_generation)
        throw CapabilityError("run: sequence model requires a sequence pool");
      break;
    case ModelKind::external:
      if (!model)
        throw ConfigError(
            "run: external model kind requires a model instance");
      if (!model->supports(pool.task))
        throw CapabilityError("run: model '" + model->id() +
                              "' does not support task " +
                              to_string(pool.task));
      break;
  }

  if ((is_uncertainty_method(acquisition.method) ||
       acquisition.method == Method::badge) &&
      pool.task != TaskKind::classification)
    throw CapabilityError("run: acquisition '" + to_string(acquisition.method) +
                          "' needs class probabilities; task is " +
                          to_string(pool.task));
  if (acquisition.method == Method::bald && acquisition.bald_passes < 2)
    throw ConfigError("run: bald needs at least 2 passes");
  if (acquisition.method == Method::cal && acquisition.cal_k < 1)
    throw ConfigError("run: cal k must be >= 1");

  for (MetricId m : metrics) {
    const bool needs_cls = m == MetricId::accuracy || m == MetricId::f1;
    if (needs_cls && pool.task != TaskKind::classification)
      throw CapabilityError("run: metric '" + to_string(m) +
                            "' needs a classification task");
    if (!needs_cls && pool.task != TaskKind::sequence_generation)
      throw CapabilityError("run: metric '" + to_string(m) +
                            "' needs a sequence task");
    if (m == MetricId::f1 && pool.num_classes != 2)
      throw ConfigError("run: f1 requires a binary pool, got " +
                        std::to_string(pool.num_classes) + " classes");
  }
}

Selection select_batch(const Pool& pool, const ModelOracle* model,
                       const MethodSpec& spec, std::span<const int> labeled,
                       std::span<const int> candidates, int budget, Rng& rng,
                       int workers, int pad_len, int pad_id) {
  if (is_uncertainty_method(spec.method) &&
      pool.task != TaskKind::classification)
    throw CapabilityError("acquisition '" + to_string(spec.method) +
                          "' needs class probabilities; task is " +
                          to_string(pool.task));

  const FeatureKind kind = resolve_feature(spec.method, spec.feature,
                                           spec.feature_is_auto, pool.task);
  const auto need_model = [&]() -> const ModelOracle* {
    if (model == nullptr)
      throw ConfigError("acquisition '" + to_string(spec.method) +
                        "' requires a model");
    return model;
  };
  // Views are only model-backed for embedding/output kinds.
  const ModelOracle* view_model =
      kind == FeatureKind::token ? model : need_model();
  const std::vector<int> cand = sorted_copy(candidates);
  const std::vector<int> lab = sorted_copy(labeled);

  switch (spec.method) {
    case Method::random:
      return select_random(candidates, budget, rng);

    case Method::lc:
    case Method::margin:
    case Method::entropy:
    case Method::gini: {
      const ProbMatrix probs = need_model()->predict_proba(pool, cand);
      const auto scores = score_uncertainty(probs, uncertainty_of(spec.method),
                                            spec.entropy_direction);
      return select_top(scores, cand, budget, to_string(spec.method),
                        rng.seed());
    }

    case Method::bald: {
      const ModelOracle* mdl = need_model();
      if (!mdl->supports_stochastic())
        throw CapabilityError("bald: model '" + mdl->id() +
                              "' does not support stochastic passes");
      if (spec.bald_passes < 2)
        throw ConfigError("bald: need at least 2 passes");
      std::vector<ProbMatrix> passes;
      passes.reserve(static_cast<std::size_t>(spec.bald_passes));
      for (int t = 0; t < spec.bald_passes; ++t)
        passes.push_back(mdl->predict_proba_stochastic(pool, cand, rng));
      const auto scores = score_bald(ProbStack::from(std::move(passes)));
      return select_top(scores, cand, budget, "bald", rng.seed());
    }

    case Method::cal: {
      const ModelOracle* mdl = need_model();
      if (lab.empty()) throw ConfigError("cal: labeled set is empty");
      const ProbMatrix cand_probs = mdl->predict_proba(pool, cand);
      const ProbMatrix lab_probs = mdl->predict_proba(pool, lab);
      const FeatureView cand_feats =
          make_feature_view(pool, kind, mdl, cand, pad_len, pad_id);
      const FeatureView lab_feats =
          make_feature_view(pool, kind, mdl, lab, pad_len, pad_id);
      const auto scores =
          score_cal(cand_probs, cand_feats, lab_probs, lab_feats, spec.cal_k);
      return select_top(scores, cand, budget, "cal", rng.seed());
    }

    case Method::kmeans: {
      const FeatureView view =
          make_feature_view(pool, kind, view_model, cand, pad_len, pad_id);
      return select_kmeans(view, cand, budget, rng);
    }

    case Method::badge: {
      const ModelOracle* mdl = need_model();
      const ProbMatrix probs = mdl->predict_proba(pool, cand);
      const FeatureView view =
          make_feature_view(pool, kind, mdl, cand, pad_len, pad_id);
      return select_badge(probs, view, cand, budget, rng);
    }

    case Method::kcenter: {
      const std::vector<int> universe = sorted_union(lab, cand);
      const FeatureView view =
          make_feature_view(pool, kind, view_model, universe, pad_len, pad_id);
      const EuclideanSource src(view);
      return select_kcenter(src, lab, cand, budget, workers);
    }

    case Method::coreset: {
      const std::vector<int> universe = sorted_union(lab, cand);
      const std::string& step = spec.coreset_step_metric;
      if (step == "euclidean" || step == "cosine") {
        const FeatureView view = make_feature_view(pool, kind, view_model,
                                                   universe, pad_len, pad_id);
        const auto src = make_vector_source(step, view.m, view.item_ids);
        return select_coreset(*src, lab, cand, budget,
                              spec.coreset_outlier_bound, workers)
            .selection;
      }
      // Sequence step metric: seed distances stay euclidean over the
      // embedding view; the greedy updates walk the sequence metric.
      const ModelOracle* mdl = need_model();
      const FeatureView emb = make_feature_view(
          pool, FeatureKind::embedding, mdl, universe, pad_len, pad_id);
      const EuclideanSource init_src(emb);
      std::vector<std::vector<int>> seqs;
      seqs.reserve(universe.size());
      for (int id : universe)
        seqs.push_back(pool.items[static_cast<std::size_t>(id)].tokens);
      std::optional<TokenEmbeddingTable> table;
      if (step == "greedy_match") {
        if (auto t = mdl->token_embeddings())
          table = TokenEmbeddingTable{std::move(*t)};
        else
          table = random_embedding_table(
              static_cast<std::size_t>(pool.vocab_size), 16, rng.seed());
      }
      const auto step_src = make_sequence_source(
          step, std::move(seqs), universe, table ? &*table : nullptr);
      return select_coreset(init_src, *step_src, lab, cand, budget,
                            spec.coreset_outlier_bound, workers)
          .selection;
    }
  }
  throw ConfigError("unknown acquisition method");
}

std::vector<MetricValue> evaluate_model(const Pool& pool,
                                        const ModelOracle& model,
                                        std::span<const int> test_items,
                                        std::span<const MetricId> metrics) {
  if (test_items.empty()) throw ConfigError("evaluate: empty test split");

  std::vector<int> preds;
  std::vector<int> labels;
  const bool wants_cls =
      std::any_of(metrics.begin(), metrics.end(), [](MetricId m) {
        return m == MetricId::accuracy || m == MetricId::f1;
      });
  if (wants_cls) {
    const ProbMatrix probs = model.predict_proba(pool, test_items);
    preds.reserve(test_items.size());
    labels.reserve(test_items.size());
    for (std::size_t i = 0; i < probs.rows(); ++i) {
      const auto row = probs.row(i);
      std::size_t best = 0;
      for (std::size_t c = 1; c < row.size(); ++c)
        if (row[c] > row[best]) best = c;
      preds.push_back(static_cast<int>(best));
      labels.push_back(
          pool.items[static_cast<std::size_t>(test_items[i])].class_label);
    }
  }

  std::vector<GeneratedSeq> gens;
  const bool wants_bleu =
      std::find(metrics.begin(), metrics.end(), MetricId::bleu) !=
      metrics.end();
  if (wants_bleu) gens = model.generate(pool, test_items);

  std::vector<MetricValue> out;
  out.reserve(metrics.size());
  for (MetricId m : metrics) {
    double value = 0.0;
    switch (m) {
      case MetricId::accuracy:
        value = accuracy(preds, labels);
        break;
      case MetricId::f1: {
        long long tp = 0, fp = 0, fn_ = 0;
        for (std::size_t i = 0; i < preds.size(); ++i) {
          if (preds[i] == 1 && labels[i] == 1) ++tp;
          if (preds[i] == 1 && labels[i] != 1) ++fp;
          if (preds[i] != 1 && labels[i] == 1) ++fn_;
        }
        value = f1_score(tp, fp, fn_);
        break;
      }
      case MetricId::perplexity: {
        // Corpus perplexity: one stream of teacher-forced reference
        // log-likelihoods across the whole split.
        std::vector<double> all;
        for (int id : test_items) {
          const auto ll = model.reference_loglik(pool, id);
          all.insert(all.end(), ll.begin(), ll.end());
        }
        value = perplexity(all);
        break;
      }
      case MetricId::bleu: {
        double sum = 0.0;
        for (std::size_t i = 0; i < gens.size(); ++i) {
          const auto& ref =
              pool.items[static_cast<std::size_t>(test_items[i])].reference;
          if (!gens[i].tokens.empty()) sum += bleu(gens[i].tokens, ref);
        }
        value = sum / static_cast<double>(gens.size());
        break;
      }
    }
    out.push_back(MetricValue{m, value, direction_of(m)});
  }
  return out;
}

RunLog run_active_learning(const Pool& pool, const RunConfig& cfg) {
  pool.validate();
  cfg.validate(pool);

  const std::vector<int> train = pool.train_indices();
  const std::vector<int> test = pool.test_indices();
  if (test.empty()) throw ConfigError("run: empty test split");
  const long long budget = cfg.round_budget(pool);

  Rng root(cfg.seed);
  std::shared_ptr<ModelOracle> model = cfg.model;
  if (!model) {
    switch (cfg.model_kind) {
      case ModelKind::classifier:
        model = make_toy_classifier(cfg.train);
        break;
      case ModelKind::seqmodel:
        model = make_toy_seqmodel(cfg.train);
        break;
      case ModelKind::external:
        throw ConfigError("run: external model kind requires a model instance");
    }
  }

  RunLog log;
  log.seed = cfg.seed;
  log.method_label = cfg.acquisition.effective_label();
  log.train_size = static_cast<int>(train.size());
  log.cfg = cfg;

  Rng init_rng = root.derive(kInitStream);
  const std::vector<int> draw = init_rng.sample_without_replacement(
      static_cast<int>(train.size()), cfg.init_size);
  std::vector<int> selected0;
  selected0.reserve(draw.size());
  for (int pos : draw) selected0.push_back(train[static_cast<std::size_t>(pos)]);

  std::vector<int> labeled = sorted_copy(selected0);
  std::vector<int> candidates = sorted_minus(train, labeled);

  const auto train_once = [&](int round) {
    Rng trng = root.derive(kTrainStream + static_cast<std::uint64_t>(round));
    const auto t0 = std::chrono::steady_clock::now();
    model->train(pool, labeled, trng);
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count();
  };

  {
    const double secs = train_once(0);
    RoundRecord rec;
    rec.round = 0;
    rec.labeled_count = static_cast<int>(labeled.size());
    rec.selected_ids = selected0;
    rec.train_seconds = secs;
    rec.metrics = evaluate_model(pool, *model, test, cfg.metrics);
    log.rounds.push_back(std::move(rec));
  }

  for (int round = 1; round <= cfg.rounds; ++round) {
    if (candidates.empty()) {
      warn("run: candidate pool exhausted before round " +
           std::to_string(round) + ", stopping early");
      break;
    }
    const long long want =
        std::min<long long>(budget, static_cast<long long>(candidates.size()));
    if (want < budget)
      warn("run: round " + std::to_string(round) + " batch clipped to " +
           std::to_string(want) + " remaining candidates");

    Rng arng = root.derive(kAcquireStream + static_cast<std::uint64_t>(round));
    Selection sel = select_batch(pool, model.get(), cfg.acquisition, labeled,
                                 candidates, static_cast<int>(want), arng,
                                 cfg.workers, cfg.train.pad_len,
                                 cfg.train.pad_id);
    validate_selection(sel, candidates, static_cast<int>(want));

    const std::vector<int> picked = sorted_copy(sel.indices);
    labeled = sorted_union(labeled, picked);
    candidates = sorted_minus(candidates, picked);

    const double secs = train_once(round);
    RoundRecord rec;
    rec.round = round;
    rec.labeled_count = static_cast<int>(labeled.size());
    rec.selected_ids = std::move(sel.indices);
    rec.train_seconds = secs;
    rec.metrics = evaluate_model(pool, *model, test, cfg.metrics);
    log.rounds.push_back(std::move(rec));
  }
  return log;
}

std::string runlog_csv(const RunLog& log) {
  std::string out = "round,labeled";
  for (MetricId m : log.cfg.metrics) out += "," + to_string(m);
  out += "\n";
  for (const auto& r : log.rounds) {
    out += std::to_string(r.round) + "," + std::to_string(r.labeled_count);
    for (const auto& mv : r.metrics) out += "," + format_double(mv.value);
    out += "\n";
  }
  return out;
}

std::string runlog_sidecar_json(const RunLog& log) {
  json j;
  j["version"] = log.version;
  j["seed"] = log.seed;
  j["method"] = log.method_label;
  j["train_size"] = log.train_size;

  json cfg;
  cfg["init_size"] = log.cfg.init_size;
  cfg["round_fraction"] = log.cfg.round_fraction;
  cfg["rounds"] = log.cfg.rounds;
  cfg["seed"] = log.cfg.seed;
  cfg["model_kind"] = to_string(log.cfg.model_kind);
  cfg["workers"] = log.cfg.workers;
  json names = json::array();
  for (MetricId m : log.cfg.metrics) names.push_back(to_string(m));
  cfg["metrics"] = names;
  cfg["acquisition"] = method_spec_json(log.cfg.acquisition);
  cfg["train"] = train_config_json(log.cfg.train);
  j["config"] = cfg;

  json rounds = json::array();
  for (const auto& r : log.rounds) {
    json row;
    row["round"] = r.round;
    row["labeled"] = r.labeled_count;
    row["selected_ids"] = r.selected_ids;
    json vals;
    for (const auto& mv : r.metrics) vals[to_string(mv.id)] = mv.value;
    row["metrics"] = vals;
    rounds.push_back(row);
  }
  j["rounds"] = rounds;
  return j.dump(2) + "\n";
}

std::string runlog_metadata_json(const RunLog& log,
                                 const std::string& timestamp) {
  json j;
  j["timestamp"] = timestamp;
  json secs = json::array();
  double total = 0.0;
  for (const auto& r : log.rounds) {
    secs.push_back(r.train_seconds);
    total += r.train_seconds;
  }
  j["train_seconds"] = secs;
  j["total_train_seconds"] = total;
  return j.dump(2) + "\n";
}

ComparisonTable compare_runs(const std::vector<RunLog>& logs,
                             const std::vector<double>& checkpoints) {
  if (logs.empty()) throw ConfigError("compare: no runs");
  const RunLog& ref = logs.front();
  if (ref.rounds.empty()) throw ConfigError("compare: run has no rounds");

  for (const RunLog& log : logs) {
    if (log.cfg.metrics != ref.cfg.metrics)
      throw ConfigError("compare: mismatched metric sets");
    if (log.train_size != ref.train_size)
      throw ConfigError("compare: mismatched train sizes");
    if (log.rounds.size() != ref.rounds.size())
      throw ConfigError("compare: mismatched round structure");
    for (std::size_t r = 0; r < log.rounds.size(); ++r)
      if (log.rounds[r].labeled_count != ref.rounds[r].labeled_count)
        throw ConfigError("compare: mismatched round structure");
  }

  // Checkpoint fraction -> earliest round whose labeled count reaches it.
  std::vector<std::pair<int, double>> points;  // (round index, fraction)
  const auto fraction_at = [&](int round) {
    return static_cast<double>(ref.rounds[static_cast<std::size_t>(round)]
                                   .labeled_count) /
           static_cast<double>(ref.train_size);
  };
  if (checkpoints.empty()) {
    const int last = static_cast<int>(ref.rounds.size()) - 1;
    points.emplace_back(last, fraction_at(last));
  } else {
    for (double f : checkpoints) {
      if (!(f > 0.0) || f > 1.0)
        throw ConfigError("compare: checkpoint fraction must be in (0, 1]");
      const long long target = ceil_fraction(f, ref.train_size);
      int round = -1;
      for (std::size_t r = 0; r < ref.rounds.size(); ++r) {
        if (ref.rounds[r].labeled_count >= target) {
          round = static_cast<int>(r);
          break;
        }
      }
      if (round < 0) {
        round = static_cast<int>(ref.rounds.size()) - 1;
        warn("compare: checkpoint " + format_double(f) +
             " beyond the run's final budget, using the last round");
      }
      points.emplace_back(round, f);
    }
  }

  ComparisonTable table;
  for (std::size_t m = 0; m < ref.cfg.metrics.size(); ++m) {
    for (const auto& [round, fraction] : points) {
      ComparisonColumn col;
      col.metric = ref.cfg.metrics[m];
      col.fraction = fraction;
      col.round = round;
      col.labeled =
          ref.rounds[static_cast<std::size_t>(round)].labeled_count;
      table.columns.push_back(col);
    }
  }

  std::vector<std::vector<const RunLog*>> groups;
  for (const RunLog& log : logs) {
    const auto it = std::find(table.methods.begin(), table.methods.end(),
                              log.method_label);
    if (it == table.methods.end()) {
      table.methods.push_back(log.method_label);
      groups.emplace_back();
      groups.back().push_back(&log);
    } else {
      groups[static_cast<std::size_t>(it - table.methods.begin())].push_back(
          &log);
    }
  }

  table.cells.assign(table.methods.size(), {});
  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto& row = table.cells[g];
    row.resize(table.columns.size());
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      const auto& col = table.columns[c];
      const std::size_t metric_idx = static_cast<std::size_t>(
          std::find(ref.cfg.metrics.begin(), ref.cfg.metrics.end(),
                    col.metric) -
          ref.cfg.metrics.begin());
      double sum = 0.0;
      for (const RunLog* log : groups[g])
        sum += log->rounds[static_cast<std::size_t>(col.round)]
                   .metrics[metric_idx]
                   .value;
      const int n = static_cast<int>(groups[g].size());
      const double mean = sum / n;
      double ss = 0.0;
      for (const RunLog* log : groups[g]) {
        const double d = log->rounds[static_cast<std::size_t>(col.round)]
                             .metrics[metric_idx]
                             .value -
                         mean;
        ss += d * d;
      }
      row[c].mean = mean;
      row[c].stddev = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
      row[c].n = n;
    }
  }

  if (table.methods.size() >= 2) {
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      const bool higher =
          direction_of(table.columns[c].metric) == Direction::higher_better;
      std::vector<double> means;
      for (const auto& row : table.cells) means.push_back(row[c].mean);
      std::vector<double> distinct = means;
      std::sort(distinct.begin(), distinct.end());
      if (higher) std::reverse(distinct.begin(), distinct.end());
      distinct.erase(std::unique(distinct.begin(), distinct.end()),
                     distinct.end());
      const double best = distinct[0];
      for (std::size_t g = 0; g < table.cells.size(); ++g) {
        if (means[g] == best) table.cells[g][c].best = true;
        if (distinct.size() > 1 && means[g] == distinct[1])
          table.cells[g][c].second = true;
      }
    }
  }
  return table;
}

std::string comparison_csv(const ComparisonTable& table) {
  std::string out = "method,metric,checkpoint,round,labeled,mean,stddev,n,flag\n";
  for (std::size_t g = 0; g < table.methods.size(); ++g) {
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      const auto& col = table.columns[c];
      const auto& cell = table.cells[g][c];
      out += table.methods[g] + "," + to_string(col.metric) + "," +
             format_double(col.fraction) + "," + std::to_string(col.round) +
             "," + std::to_string(col.labeled) + "," +
             format_double(cell.mean) + "," + format_double(cell.stddev) +
             "," + std::to_string(cell.n) + ",";
      out += cell.best ? "best" : (cell.second ? "second" : "");
      out += "\n";
    }
  }
  return out;
}

}  // namespace alkit
