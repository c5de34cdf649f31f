#include "alkit/cli.hpp"

#include <algorithm>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "alkit/analysis.hpp"
#include "alkit/distance.hpp"
#include "alkit/io.hpp"
#include "alkit/models.hpp"
#include "alkit/plot.hpp"
#include "alkit/pool.hpp"
#include "alkit/simulate.hpp"

namespace alkit {

namespace {

using nlohmann::json;

std::string iso_utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::tm tm_utc;
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory: " + dir);
}

json parse_json_file(const std::string& path, const char* what) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string(what) + ": malformed JSON in " + path +
                      ": " + e.what());
  }
}

// Strict schema: every key must be in the allow list.
void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object())
    throw ConfigError("config: " + where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    const bool known =
        std::any_of(allowed.begin(), allowed.end(),
                    [&](const char* a) { return key == a; });
    if (!known)
      throw ConfigError("config: unknown key '" + key + "' in " + where);
  }
}

struct PoolSection {
  std::string path;
  TaskKind task = TaskKind::classification;
  int vocab_size = 0;
  int num_classes = 0;
};

PoolSection parse_pool_section(const json& j) {
  check_keys(j, "pool", {"path", "task", "vocab_size", "num_classes"});
  if (!j.contains("path")) throw ConfigError("config: pool.path is required");
  PoolSection s;
  s.path = j.at("path").get<std::string>();
  s.task = task_kind_from_string(j.value("task", "classification"));
  s.vocab_size = j.value("vocab_size", 0);
  s.num_classes = j.value("num_classes", 0);
  return s;
}

struct ModelSection {
  ModelKind kind = ModelKind::classifier;
  TrainConfig train;
  std::string proba, embed, ids;  // external adapter inputs
};

ModelSection parse_model_section(const json& j) {
  check_keys(j, "model",
             {"kind", "hidden_width", "dropout_rate", "learning_rate",
              "epochs", "batch_size", "pad_len", "pad_id", "embed_dim",
              "max_gen_len", "proba", "embed", "ids"});
  ModelSection s;
  s.kind = model_kind_from_string(j.value("kind", "classifier"));
  s.train.hidden_width = j.value("hidden_width", s.train.hidden_width);
  s.train.dropout_rate = j.value("dropout_rate", s.train.dropout_rate);
  s.train.learning_rate = j.value("learning_rate", s.train.learning_rate);
  s.train.epochs = j.value("epochs", s.train.epochs);
  s.train.batch_size = j.value("batch_size", s.train.batch_size);
  s.train.pad_len = j.value("pad_len", s.train.pad_len);
  s.train.pad_id = j.value("pad_id", s.train.pad_id);
  s.train.embed_dim = j.value("embed_dim", s.train.embed_dim);
  s.train.max_gen_len = j.value("max_gen_len", s.train.max_gen_len);
  s.proba = j.value("proba", "");
  s.embed = j.value("embed", "");
  s.ids = j.value("ids", "");
  if (s.kind == ModelKind::external && (s.proba.empty() || s.embed.empty()))
    throw ConfigError(
        "config: model.kind external needs model.proba and model.embed");
  return s;
}

MethodSpec parse_method_knobs(const json& j, const std::string& method) {
  MethodSpec spec;
  spec.method = method_from_string(method);
  const std::string feature = j.value("feature", "auto");
  if (feature == "auto") {
    spec.feature_is_auto = true;
  } else {
    spec.feature_is_auto = false;
    spec.feature = feature_kind_from_string(feature);
  }
  spec.bald_passes = j.value("bald_passes", spec.bald_passes);
  spec.cal_k = j.value("cal_k", spec.cal_k);
  const std::string dir = j.value("entropy_direction", "max");
  if (dir == "max")
    spec.entropy_direction = EntropyDirection::select_max_entropy;
  else if (dir == "min")
    spec.entropy_direction = EntropyDirection::select_min_entropy;
  else
    throw ConfigError("config: entropy_direction must be 'max' or 'min'");
  if (j.contains("coreset_outlier_bound") &&
      !j.at("coreset_outlier_bound").is_null())
    spec.coreset_outlier_bound = j.at("coreset_outlier_bound").get<double>();
  spec.coreset_step_metric =
      j.value("coreset_step_metric", spec.coreset_step_metric);
  return spec;
}

std::vector<int> read_id_list(const std::string& path, const Pool& pool,
                              bool train_only) {
  const json j = parse_json_file(path, "id list");
  if (!j.is_array()) throw ConfigError("id list: " + path + " must be a JSON array");
  std::vector<int> ids;
  ids.reserve(j.size());
  std::set<int> seen;
  for (const auto& v : j) {
    if (!v.is_number_integer())
      throw ConfigError("id list: non-integer entry in " + path);
    const int id = v.get<int>();
    if (id < 0 || static_cast<std::size_t>(id) >= pool.items.size())
      throw ConfigError("id list: item " + std::to_string(id) +
                        " out of range in " + path);
    if (train_only &&
        pool.items[static_cast<std::size_t>(id)].split != Split::train)
      throw ConfigError("id list: item " + std::to_string(id) +
                        " is not in the train split");
    if (!seen.insert(id).second)
      throw ConfigError("id list: duplicate item " + std::to_string(id) +
                        " in " + path);
    ids.push_back(id);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

// ---------------------------------------------------------------------------
// select

struct SelectArgs {
  std::string pool_path;
  std::string task = "classification";
  int vocab_size = 0;
  int num_classes = 0;
  std::string method;
  std::string feature = "auto";
  int budget = 0;
  std::uint64_t seed = 0;
  std::string labeled_path;
  std::string proba_path, embed_path, ids_path;
  int bald_passes = 20;
  int cal_k = 10;
  std::string entropy_direction = "max";
  double coreset_bound = 0.0;
  bool has_coreset_bound = false;
  std::string coreset_step_metric = "euclidean";
  int workers = 1;
  TrainConfig train;
  std::string out_ids = "selection_ids.json";
  std::string out_scores = "selection_scores.csv";
};

void run_select(const SelectArgs& a) {
  const TaskKind task = task_kind_from_string(a.task);
  const Pool pool = load_pool(a.pool_path, task, a.vocab_size, a.num_classes);
  pool.validate();

  std::vector<int> labeled;
  if (!a.labeled_path.empty())
    labeled = read_id_list(a.labeled_path, pool, /*train_only=*/true);

  const std::vector<int> train = pool.train_indices();
  std::vector<int> candidates;
  std::set_difference(train.begin(), train.end(), labeled.begin(),
                      labeled.end(), std::back_inserter(candidates));

  json knobs;
  knobs["feature"] = a.feature;
  knobs["bald_passes"] = a.bald_passes;
  knobs["cal_k"] = a.cal_k;
  knobs["entropy_direction"] = a.entropy_direction;
  if (a.has_coreset_bound) knobs["coreset_outlier_bound"] = a.coreset_bound;
  knobs["coreset_step_metric"] = a.coreset_step_metric;
  const MethodSpec spec = parse_method_knobs(knobs, a.method);

  Rng root(a.seed);
  std::shared_ptr<ModelOracle> model;
  if (!a.proba_path.empty() || !a.embed_path.empty()) {
    if (a.proba_path.empty() || a.embed_path.empty())
      throw ConfigError("select: --proba and --embed must be given together");
    model = load_external_adapter(a.proba_path, a.embed_path, a.ids_path);
  } else {
    const FeatureKind kind = resolve_feature(spec.method, spec.feature,
                                             spec.feature_is_auto, pool.task);
    const bool token_only =
        (spec.method == Method::kmeans || spec.method == Method::kcenter ||
         spec.method == Method::coreset) &&
        kind == FeatureKind::token &&
        (spec.method != Method::coreset ||
         spec.coreset_step_metric == "euclidean" ||
         spec.coreset_step_metric == "cosine");
    const bool needs_model = spec.method != Method::random && !token_only;
    if (needs_model) {
      if (labeled.empty())
        throw ConfigError("select: method '" + to_string(spec.method) +
                          "' needs --labeled to train a model, or "
                          "--proba/--embed for an external one");
      TrainConfig tc = a.train;
      model = pool.task == TaskKind::classification ? make_toy_classifier(tc)
                                                    : make_toy_seqmodel(tc);
      Rng trng = root.derive(1);
      model->train(pool, labeled, trng);
    }
  }

  Rng srng = root.derive(2);
  const Selection sel =
      select_batch(pool, model.get(), spec, labeled, candidates, a.budget,
                   srng, a.workers, a.train.pad_len, a.train.pad_id);

  const json ids_json = sel.indices;
  write_text(a.out_ids, ids_json.dump() + "\n");
  std::string csv = "index,score\n";
  for (std::size_t i = 0; i < sel.indices.size(); ++i)
    csv += std::to_string(sel.indices[i]) + "," +
           format_double(sel.scores[i]) + "\n";
  write_text(a.out_scores, csv);
  std::cout << "selected " << sel.indices.size() << " of " << candidates.size()
            << " candidates -> " << a.out_ids << ", " << a.out_scores << "\n";
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string config_path;
};

void run_simulate(const SimulateArgs& a) {
  const json cfg = parse_json_file(a.config_path, "config");
  check_keys(cfg, "config",
             {"pool", "model", "acquisition", "budgets", "metrics", "seeds",
              "output_dir", "workers", "plot", "comparison_checkpoints"});
  for (const char* req : {"pool", "acquisition", "metrics", "seeds",
                          "output_dir"})
    if (!cfg.contains(req))
      throw ConfigError(std::string("config: missing section '") + req + "'");

  const PoolSection ps = parse_pool_section(cfg.at("pool"));
  const ModelSection ms =
      parse_model_section(cfg.contains("model") ? cfg.at("model") : json::object());

  const json& acq = cfg.at("acquisition");
  check_keys(acq, "acquisition",
             {"methods", "feature", "bald_passes", "cal_k",
              "entropy_direction", "coreset_outlier_bound",
              "coreset_step_metric"});
  if (!acq.contains("methods") || !acq.at("methods").is_array() ||
      acq.at("methods").empty())
    throw ConfigError("config: acquisition.methods must be a non-empty array");

  json budgets = cfg.contains("budgets") ? cfg.at("budgets") : json::object();
  check_keys(budgets, "budgets", {"init_size", "round_fraction", "rounds"});
  const int init_size = budgets.value("init_size", 500);
  const double round_fraction = budgets.value("round_fraction", 0.01);
  const int rounds = budgets.value("rounds", 10);

  std::vector<MetricId> metrics;
  for (const auto& m : cfg.at("metrics"))
    metrics.push_back(metric_from_string(m.get<std::string>()));
  if (metrics.empty()) throw ConfigError("config: metrics must be non-empty");

  std::vector<std::uint64_t> seeds;
  for (const auto& s : cfg.at("seeds")) seeds.push_back(s.get<std::uint64_t>());
  if (seeds.empty()) throw ConfigError("config: seeds must be non-empty");

  const std::string output_dir = cfg.at("output_dir").get<std::string>();
  const int workers = cfg.value("workers", 1);
  const bool want_plot = cfg.value("plot", false);
  std::vector<double> checkpoints;
  if (cfg.contains("comparison_checkpoints"))
    for (const auto& c : cfg.at("comparison_checkpoints"))
      checkpoints.push_back(c.get<double>());

  const Pool pool =
      load_pool(ps.path, ps.task, ps.vocab_size, ps.num_classes);
  pool.validate();
  ensure_dir(output_dir);

  std::shared_ptr<ModelOracle> external;
  if (ms.kind == ModelKind::external)
    external = load_external_adapter(ms.proba, ms.embed, ms.ids);

  std::vector<RunLog> logs;
  for (const auto& method : acq.at("methods")) {
    const MethodSpec spec = parse_method_knobs(acq, method.get<std::string>());
    for (std::uint64_t seed : seeds) {
      RunConfig rc;
      rc.init_size = init_size;
      rc.round_fraction = round_fraction;
      rc.rounds = rounds;
      rc.seed = seed;
      rc.acquisition = spec;
      rc.model_kind = ms.kind;
      rc.train = ms.train;
      rc.metrics = metrics;
      rc.workers = workers;
      rc.model = external;

      const RunLog log = run_active_learning(pool, rc);
      const std::string stem = output_dir + "/" + spec.effective_label() +
                               "_seed" + std::to_string(seed);
      write_text(stem + ".csv", runlog_csv(log));
      write_text(stem + ".json", runlog_sidecar_json(log));
      write_text(stem + ".meta.json", runlog_metadata_json(log, iso_utc_now()));
      std::cout << "run " << spec.effective_label() << " seed " << seed
                << " -> " << stem << ".csv\n";
      logs.push_back(log);
    }
  }

  const ComparisonTable table = compare_runs(logs, checkpoints);
  write_text(output_dir + "/comparison.csv", comparison_csv(table));

  if (want_plot) {
    for (std::size_t m = 0; m < metrics.size(); ++m) {
      std::vector<PlotSeries> series;
      for (const std::string& label : table.methods) {
        PlotSeries s;
        s.name = label;
        // Mean across this method's seeds, per round.
        std::vector<const RunLog*> group;
        for (const RunLog& log : logs)
          if (log.method_label == label) group.push_back(&log);
        const std::size_t round_count = group.front()->rounds.size();
        for (std::size_t r = 0; r < round_count; ++r) {
          double sum = 0.0;
          for (const RunLog* log : group)
            sum += log->rounds[r].metrics[m].value;
          s.x.push_back(group.front()->rounds[r].labeled_count);
          s.y.push_back(sum / static_cast<double>(group.size()));
        }
        series.push_back(std::move(s));
      }
      const std::string name = to_string(metrics[m]);
      write_text(output_dir + "/plot_" + name + ".svg",
                 svg_line_chart(name + " by labeled budget", "labeled items",
                                name, series));
    }
  }
  std::cout << "comparison -> " << output_dir << "/comparison.csv\n";
}

// ---------------------------------------------------------------------------
// study

struct StudyArgs {
  std::string config_path;
};

void run_study(const StudyArgs& a) {
  const json cfg = parse_json_file(a.config_path, "config");
  check_keys(cfg, "config",
             {"pool", "model", "study", "budgets", "seed", "output_dir",
              "workers"});
  for (const char* req : {"pool", "study", "output_dir"})
    if (!cfg.contains(req))
      throw ConfigError(std::string("config: missing section '") + req + "'");

  const PoolSection ps = parse_pool_section(cfg.at("pool"));
  const ModelSection ms =
      parse_model_section(cfg.contains("model") ? cfg.at("model") : json::object());

  const json& st = cfg.at("study");
  check_keys(st, "study", {"repeats", "stage", "distance_methods", "metric"});
  if (!st.contains("distance_methods") ||
      !st.at("distance_methods").is_array() ||
      st.at("distance_methods").empty())
    throw ConfigError(
        "config: study.distance_methods must be a non-empty array");

  json budgets = cfg.contains("budgets") ? cfg.at("budgets") : json::object();
  check_keys(budgets, "budgets", {"init_size", "round_fraction"});

  StudyConfig sc;
  sc.run.init_size = budgets.value("init_size", 500);
  sc.run.round_fraction = budgets.value("round_fraction", 0.01);
  sc.run.seed = cfg.value("seed", 0);
  sc.run.model_kind = ms.kind;
  sc.run.train = ms.train;
  sc.run.workers = cfg.value("workers", 1);
  sc.repeats = st.value("repeats", 100);
  sc.stage = stage_from_string(st.value("stage", "early"));
  for (const auto& m : st.at("distance_methods"))
    sc.distance_methods.push_back(m.get<std::string>());
  sc.metric = metric_from_string(st.value("metric", "accuracy"));

  const Pool pool =
      load_pool(ps.path, ps.task, ps.vocab_size, ps.num_classes);
  pool.validate();
  const std::string output_dir = cfg.at("output_dir").get<std::string>();
  ensure_dir(output_dir);

  const CorrelationReport report = run_correlation_study(pool, sc);
  write_text(output_dir + "/report.json", correlation_report_json(report));
  write_text(output_dir + "/rho.csv", correlation_rho_csv(report));
  write_text(output_dir + "/pairs.csv", correlation_pairs_csv(report));
  std::cout << "study (" << to_string(report.stage) << ", "
            << report.repeats << " repeats) -> " << output_dir
            << "/report.json\n";
}

// ---------------------------------------------------------------------------
// pairwise

struct PairwiseArgs {
  std::string pool_path;
  std::string task = "classification";
  int vocab_size = 0;
  int num_classes = 0;
  std::string metric;
  std::string features_path;
  std::string embed_table_path;
  int embed_dim = 16;
  int max_n = 4;
  int subsample = 0;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string out = "pairwise.alfv";
  std::string sidecar = "pairwise.json";
};

void run_pairwise(const PairwiseArgs& a) {
  const TaskKind task = task_kind_from_string(a.task);
  const Pool pool = load_pool(a.pool_path, task, a.vocab_size, a.num_classes);
  pool.validate();

  std::unique_ptr<DistanceSource> source;
  if (a.metric == "euclidean" || a.metric == "cosine") {
    if (a.features_path.empty())
      throw ConfigError("pairwise: metric '" + a.metric +
                        "' needs --features with one vector row per item");
    Matrix rows = read_matrix_auto(a.features_path);
    std::vector<int> ids(rows.rows());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
    source = make_vector_source(a.metric, std::move(rows), std::move(ids));
  } else {
    std::vector<std::vector<int>> seqs;
    std::vector<int> ids;
    seqs.reserve(pool.items.size());
    ids.reserve(pool.items.size());
    for (const auto& item : pool.items) {
      seqs.push_back(item.tokens);
      ids.push_back(item.id);
    }
    std::optional<TokenEmbeddingTable> table;
    if (a.metric == "greedy_match") {
      if (!a.embed_table_path.empty())
        table = TokenEmbeddingTable{read_matrix_auto(a.embed_table_path)};
      else
        table = random_embedding_table(
            static_cast<std::size_t>(pool.vocab_size),
            static_cast<std::size_t>(a.embed_dim), a.seed);
    }
    source = make_sequence_source(a.metric, std::move(seqs), std::move(ids),
                                  table ? &*table : nullptr, a.max_n);
  }

  std::optional<SubsampleSpec> sub;
  if (a.subsample > 0) sub = SubsampleSpec{a.subsample, a.seed};
  const DistanceMatrix dm = pairwise_matrix(*source, a.workers, sub);
  save_distance_matrix(dm, a.out, a.sidecar);
  std::cout << "wrote " << dm.d.rows() << "x" << dm.d.cols() << " " << a.metric
            << " matrix -> " << a.out << "\n";
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"pool-based active-learning toolkit"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  auto select_args = std::make_shared<SelectArgs>();
  auto* sel = app.add_subcommand("select", "score and pick one batch");
  sel->add_option("--pool", select_args->pool_path, "pool JSONL file")
      ->required();
  sel->add_option("--task", select_args->task,
                  "classification or sequence_generation");
  sel->add_option("--vocab-size", select_args->vocab_size,
                  "token vocabulary size (0 = infer)");
  sel->add_option("--num-classes", select_args->num_classes,
                  "class count (0 = infer)");
  sel->add_option("--method", select_args->method, "acquisition method id")
      ->required();
  sel->add_option("--feature", select_args->feature,
                  "token, embedding, output, or auto");
  sel->add_option("--budget", select_args->budget, "batch size")->required();
  sel->add_option("--seed", select_args->seed, "run seed");
  sel->add_option("--labeled", select_args->labeled_path,
                  "JSON array of already-labeled train items");
  sel->add_option("--proba", select_args->proba_path,
                  "external class-probability matrix");
  sel->add_option("--embed", select_args->embed_path,
                  "external embedding matrix");
  sel->add_option("--ids", select_args->ids_path,
                  "JSON array of item ids for the external rows");
  sel->add_option("--bald-passes", select_args->bald_passes,
                  "stochastic passes for bald");
  sel->add_option("--cal-k", select_args->cal_k, "neighbors for cal");
  sel->add_option("--entropy-direction", select_args->entropy_direction,
                  "max or min");
  auto* bound_opt =
      sel->add_option("--coreset-bound", select_args->coreset_bound,
                      "outlier distance bound for coreset");
  sel->add_option("--coreset-step-metric", select_args->coreset_step_metric,
                  "euclidean, cosine, bleu, or greedy_match");
  sel->add_option("--workers", select_args->workers, "worker threads");
  sel->add_option("--pad-len", select_args->train.pad_len,
                  "token view padded length");
  sel->add_option("--pad-id", select_args->train.pad_id, "padding token id");
  sel->add_option("--hidden", select_args->train.hidden_width,
                  "model hidden width");
  sel->add_option("--dropout", select_args->train.dropout_rate,
                  "dropout rate");
  sel->add_option("--lr", select_args->train.learning_rate, "learning rate");
  sel->add_option("--epochs", select_args->train.epochs, "training epochs");
  sel->add_option("--batch", select_args->train.batch_size,
                  "training batch size");
  sel->add_option("--embed-dim", select_args->train.embed_dim,
                  "sequence model embedding width");
  sel->add_option("--max-gen-len", select_args->train.max_gen_len,
                  "generation length cap");
  sel->add_option("--out-ids", select_args->out_ids,
                  "selected-id JSON output path");
  sel->add_option("--out-scores", select_args->out_scores,
                  "score CSV output path");
  sel->callback([select_args, bound_opt]() {
    select_args->has_coreset_bound = bound_opt->count() > 0;
    run_select(*select_args);
  });

  auto simulate_args = std::make_shared<SimulateArgs>();
  auto* sim = app.add_subcommand("simulate", "run the acquisition loop");
  sim->add_option("--config", simulate_args->config_path,
                  "experiment config JSON")
      ->required();
  sim->callback([simulate_args]() { run_simulate(*simulate_args); });

  auto study_args = std::make_shared<StudyArgs>();
  auto* stu = app.add_subcommand("study", "diversity-performance correlation");
  stu->add_option("--config", study_args->config_path,
                  "study config JSON")
      ->required();
  stu->callback([study_args]() { run_study(*study_args); });

  auto pairwise_args = std::make_shared<PairwiseArgs>();
  auto* pw = app.add_subcommand("pairwise", "full pairwise distance matrix");
  pw->add_option("--pool", pairwise_args->pool_path, "pool JSONL file")
      ->required();
  pw->add_option("--task", pairwise_args->task,
                 "classification or sequence_generation");
  pw->add_option("--vocab-size", pairwise_args->vocab_size,
                 "token vocabulary size (0 = infer)");
  pw->add_option("--num-classes", pairwise_args->num_classes,
                 "class count (0 = infer)");
  pw->add_option("--metric", pairwise_args->metric, "distance metric id")
      ->required();
  pw->add_option("--features", pairwise_args->features_path,
                 "vector rows for euclidean/cosine");
  pw->add_option("--embed-table", pairwise_args->embed_table_path,
                 "token embedding table for greedy_match");
  pw->add_option("--embed-dim", pairwise_args->embed_dim,
                 "random table width when no table is given");
  pw->add_option("--max-n", pairwise_args->max_n, "bleu n-gram order");
  pw->add_option("--subsample", pairwise_args->subsample,
                 "compute on a seeded subset of this size");
  pw->add_option("--seed", pairwise_args->seed, "subsample/table seed");
  pw->add_option("--workers", pairwise_args->workers, "worker threads");
  pw->add_option("--out", pairwise_args->out, "ALFV output path");
  pw->add_option("--sidecar", pairwise_args->sidecar,
                 "JSON sidecar output path");
  pw->callback([pairwise_args]() { run_pairwise(*pairwise_args); });

  try {
    app.parse(argc, argv);
    return 0;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const CapabilityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace alkit
