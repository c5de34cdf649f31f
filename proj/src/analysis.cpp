#include "alkit/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <set>
#include <utility>

#include <json.hpp>

#include "alkit/io.hpp"

namespace alkit {

namespace {

using nlohmann::json;

// Derived-stream tags local to the study; repeats start at kRepeatStream.
constexpr std::uint64_t kBaseStream = 11;
constexpr std::uint64_t kEmbedderFitStream = 12;
constexpr std::uint64_t kEmbedderTrainStream = 13;
constexpr std::uint64_t kTableStream = 14;
constexpr std::uint64_t kRepeatStream = 0x800;

void check_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) throw ConfigError("spearman: non-finite input");
}

// 1-based ranks; runs of equal values share their average rank.
std::vector<double> average_ranks(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return v[a] < v[b] || (v[a] == v[b] && a < b);
  });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 +
                       1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

bool has_ties(std::span<const double> v) {
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  return std::adjacent_find(s.begin(), s.end()) != s.end();
}

bool is_constant(std::span<const double> v) {
  return std::adjacent_find(v.begin(), v.end(),
                            [](double a, double b) { return a != b; }) ==
         v.end();
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0)
    throw ConfigError("spearman: rho undefined for a constant vector");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// Continued fraction for the regularized incomplete beta (Lentz).
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-14;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

double reg_inc_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double bt = std::exp(std::lgamma(a + b) - std::lgamma(a) -
                             std::lgamma(b) + a * std::log(x) +
                             b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

// Two-sided p of a t statistic with df degrees of freedom.
double t_two_sided_p(double t, double df) {
  const double p = reg_inc_beta(df / 2.0, 0.5, df / (df + t * t));
  return std::clamp(p, 0.0, 1.0);
}

double rho_of_ranks(std::span<const double> rx, std::span<const double> ry,
                    bool tie_free) {
  const std::size_t n = rx.size();
  if (tie_free) {
    long long sumd2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const long long d = static_cast<long long>(rx[i]) -
                          static_cast<long long>(ry[i]);
      sumd2 += d * d;
    }
    const long long nn = static_cast<long long>(n);
    const long long den = nn * (nn * nn - 1);
    return 1.0 - 6.0 * static_cast<double>(sumd2) / static_cast<double>(den);
  }
  return pearson(rx, ry);
}

void spearman_precheck(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ConfigError("spearman: length mismatch");
  if (x.size() < 3)
    throw ConfigError("spearman: needs at least 3 observations");
  check_finite(x);
  check_finite(y);
  if (is_constant(x) || is_constant(y))
    throw ConfigError("spearman: rho undefined for a constant vector");
}

}  // namespace

SpearmanResult spearman(std::span<const double> x, std::span<const double> y) {
  spearman_precheck(x, y);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const bool tie_free = !has_ties(x) && !has_ties(y);
  const double rho = rho_of_ranks(rx, ry, tie_free);

  const double df = static_cast<double>(x.size()) - 2.0;
  double p;
  if (1.0 - rho * rho <= 0.0) {
    p = 0.0;
  } else {
    const double t = rho * std::sqrt(df / (1.0 - rho * rho));
    p = t_two_sided_p(std::fabs(t), df);
  }
  return SpearmanResult{rho, p};
}

double spearman_exact_p(std::span<const double> x, std::span<const double> y) {
  spearman_precheck(x, y);
  if (x.size() > 10)
    throw ConfigError("spearman: exact permutation p needs n <= 10");
  const auto rx = average_ranks(x);
  auto ry = average_ranks(y);
  const bool tie_free = !has_ties(x) && !has_ties(y);
  const double observed = std::fabs(rho_of_ranks(rx, ry, tie_free));

  // Distinct arrangements of a multiset are equally likely under the null,
  // so enumerating them with next_permutation is exact.
  std::sort(ry.begin(), ry.end());
  long long hits = 0;
  long long total = 0;
  do {
    ++total;
    if (std::fabs(pearson(rx, ry)) >= observed - 1e-12) ++hits;
  } while (std::next_permutation(ry.begin(), ry.end()));
  return static_cast<double>(hits) / static_cast<double>(total);
}

double diversity(std::span<const int> selected, const DistanceSource& source) {
  if (selected.size() < 2)
    throw ConfigError("diversity: need at least 2 items");
  double sum = 0.0;
  for (std::size_t i = 0; i < selected.size(); ++i)
    for (std::size_t j = i + 1; j < selected.size(); ++j)
      sum += source.dist(selected[i], selected[j]);
  const double pairs = static_cast<double>(selected.size()) *
                       static_cast<double>(selected.size() - 1) / 2.0;
  return sum / pairs;
}

std::string to_string(Stage s) {
  return s == Stage::early ? "early" : "late";
}

Stage stage_from_string(const std::string& s) {
  if (s == "early") return Stage::early;
  if (s == "late") return Stage::late;
  throw ConfigError("unknown study stage: " + s);
}

void StudyConfig::validate(const Pool& pool) const {
  run.train.validate();
  if (repeats < 10) throw ConfigError("study: repeats must be >= 10");
  if (distance_methods.empty())
    throw ConfigError("study: no distance methods configured");
  for (const auto& m : distance_methods) {
    if (m != "euclidean" && m != "cosine" && m != "bleu" &&
        m != "greedy_match")
      throw ConfigError("unknown distance metric: " + m);
  }
  if (!(run.round_fraction > 0.0) || run.round_fraction > 1.0)
    throw ConfigError("study: round_fraction must be in (0, 1]");
  if (run.init_size < 1) throw ConfigError("study: init_size must be >= 1");

  long long train_count = 0;
  for (const auto& item : pool.items)
    if (item.split == Split::train) ++train_count;
  const long long budget = ceil_fraction(run.round_fraction, train_count);
  if (budget < 2)
    throw ConfigError(
        "study: round budget must be >= 2 so batch diversity is defined");
  const long long base =
      stage == Stage::late ? ceil_fraction(0.05, train_count) : 0;
  if (base + budget > train_count)
    throw ConfigError("study: base set plus batch exceeds the train split");
  if (run.init_size > train_count)
    throw ConfigError("study: init_size exceeds the train split");

  const bool needs_cls =
      metric == MetricId::accuracy || metric == MetricId::f1;
  if (needs_cls && pool.task != TaskKind::classification)
    throw CapabilityError("study: metric '" + to_string(metric) +
                          "' needs a classification task");
  if (!needs_cls && pool.task != TaskKind::sequence_generation)
    throw CapabilityError("study: metric '" + to_string(metric) +
                          "' needs a sequence task");
  if (metric == MetricId::f1 && pool.num_classes != 2)
    throw ConfigError("study: f1 requires a binary pool");
}

std::vector<MethodPairRho> distance_method_correlation(
    const std::vector<std::pair<std::string, std::vector<double>>>& vectors) {
  std::vector<MethodPairRho> out;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    for (std::size_t j = i + 1; j < vectors.size(); ++j) {
      const SpearmanResult sr =
          spearman(vectors[i].second, vectors[j].second);
      out.push_back(
          MethodPairRho{vectors[i].first, vectors[j].first, sr.rho, sr.p});
    }
  }
  return out;
}

namespace {

std::vector<int> draw_items(const std::vector<int>& universe, int count,
                            Rng& rng) {
  const auto positions = rng.sample_without_replacement(
      static_cast<int>(universe.size()), count);
  std::vector<int> out;
  out.reserve(positions.size());
  for (int p : positions) out.push_back(universe[static_cast<std::size_t>(p)]);
  return out;
}

std::shared_ptr<ModelOracle> fresh_model(const StudyConfig& cfg) {
  switch (cfg.run.model_kind) {
    case ModelKind::classifier:
      return make_toy_classifier(cfg.run.train);
    case ModelKind::seqmodel:
      return make_toy_seqmodel(cfg.run.train);
    case ModelKind::external:
      throw ConfigError(
          "study: external models cannot be retrained; supply a performance "
          "override");
  }
  throw ConfigError("unknown model kind");
}

// Higher-better orientation for correlation.
double oriented(const MetricValue& mv) {
  return mv.direction == Direction::lower_better ? -mv.value : mv.value;
}

double measure_performance(const Pool& pool, const StudyConfig& cfg,
                           const std::vector<int>& labeled,
                           std::span<const int> test, Rng& rng) {
  if (pool.task == TaskKind::classification) {
    std::set<int> distinct;
    for (int id : labeled)
      distinct.insert(pool.items[static_cast<std::size_t>(id)].class_label);
    if (distinct.size() < 2) {
      // A single-class draw cannot train the classifier; score the constant
      // predictor it would collapse to.
      warn("study: single-class training draw, scoring a constant predictor");
      const int only = *distinct.begin();
      std::vector<int> preds(test.size(), only);
      std::vector<int> labels;
      labels.reserve(test.size());
      for (int id : test)
        labels.push_back(pool.items[static_cast<std::size_t>(id)].class_label);
      if (cfg.metric == MetricId::accuracy) return accuracy(preds, labels);
      long long tp = 0, fp = 0, fn_ = 0;
      for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i] == 1 && labels[i] == 1) ++tp;
        if (preds[i] == 1 && labels[i] != 1) ++fp;
        if (preds[i] != 1 && labels[i] == 1) ++fn_;
      }
      return f1_score(tp, fp, fn_);
    }
  }
  const auto model = fresh_model(cfg);
  model->train(pool, labeled, rng);
  const MetricId ids[1] = {cfg.metric};
  const auto values = evaluate_model(pool, *model, test, ids);
  return oriented(values.front());
}

}  // namespace

CorrelationReport run_correlation_study(const Pool& pool,
                                        const StudyConfig& cfg,
                                        const PerformanceFn& performance) {
  pool.validate();
  cfg.validate(pool);

  const std::vector<int> train = pool.train_indices();
  const std::vector<int> test = pool.test_indices();
  if (test.empty()) throw ConfigError("study: empty test split");
  const long long budget = cfg.run.round_budget(pool);

  Rng root(cfg.run.seed);

  std::vector<int> base;
  if (cfg.stage == Stage::late) {
    const long long count =
        ceil_fraction(0.05, static_cast<long long>(train.size()));
    Rng brng = root.derive(kBaseStream);
    base = draw_items(train, static_cast<int>(count), brng);
    std::sort(base.begin(), base.end());
  }
  std::vector<int> candidates;
  std::set_difference(train.begin(), train.end(), base.begin(), base.end(),
                      std::back_inserter(candidates));

  const bool wants_vectors =
      std::any_of(cfg.distance_methods.begin(), cfg.distance_methods.end(),
                  [](const std::string& m) {
                    return m == "euclidean" || m == "cosine";
                  });
  const bool wants_greedy =
      std::find(cfg.distance_methods.begin(), cfg.distance_methods.end(),
                "greedy_match") != cfg.distance_methods.end();

  // One embedder for every repeat, so each diversity signal is a fixed
  // function of the batch. It fits on the base set, or on its own draw when
  // the base is empty.
  std::shared_ptr<ModelOracle> embedder;
  if (wants_vectors || wants_greedy) {
    embedder = fresh_model(cfg);
    std::vector<int> fit = base;
    if (fit.empty()) {
      Rng frng = root.derive(kEmbedderFitStream);
      fit = draw_items(train, cfg.run.init_size, frng);
      std::sort(fit.begin(), fit.end());
    }
    Rng erng = root.derive(kEmbedderTrainStream);
    embedder->train(pool, fit, erng);
  }

  std::map<std::string, std::unique_ptr<DistanceSource>> sources;
  std::optional<TokenEmbeddingTable> table;
  for (const std::string& name : cfg.distance_methods) {
    if (name == "euclidean" || name == "cosine") {
      const FeatureView view = make_feature_view(
          pool, FeatureKind::embedding, embedder.get(), candidates,
          cfg.run.train.pad_len, cfg.run.train.pad_id);
      sources[name] = make_vector_source(name, view.m, view.item_ids);
      continue;
    }
    std::vector<std::vector<int>> seqs;
    seqs.reserve(candidates.size());
    for (int id : candidates)
      seqs.push_back(pool.items[static_cast<std::size_t>(id)].tokens);
    const TokenEmbeddingTable* table_ptr = nullptr;
    if (name == "greedy_match") {
      if (!table) {
        if (auto t = embedder ? embedder->token_embeddings() : std::nullopt)
          table = TokenEmbeddingTable{std::move(*t)};
        else
          table = random_embedding_table(
              static_cast<std::size_t>(pool.vocab_size),
              static_cast<std::size_t>(cfg.run.train.embed_dim),
              root.derive(kTableStream).seed());
      }
      table_ptr = &*table;
    }
    sources[name] =
        make_sequence_source(name, std::move(seqs), candidates, table_ptr);
  }

  CorrelationReport report;
  report.stage = cfg.stage;
  report.metric = cfg.metric;
  report.repeats = cfg.repeats;
  for (const std::string& name : cfg.distance_methods)
    report.diversity_vectors[name] = {};

  for (int r = 0; r < cfg.repeats; ++r) {
    Rng rrng = root.derive(kRepeatStream + static_cast<std::uint64_t>(r));
    const Selection sel =
        select_random(candidates, static_cast<int>(budget), rrng);
    std::vector<int> batch = sel.indices;

    double perf;
    if (performance) {
      perf = performance(batch, r);
    } else {
      std::vector<int> labeled = batch;
      labeled.insert(labeled.end(), base.begin(), base.end());
      std::sort(labeled.begin(), labeled.end());
      perf = measure_performance(pool, cfg, labeled, test, rrng);
    }
    report.performance.push_back(perf);

    for (const std::string& name : cfg.distance_methods)
      report.diversity_vectors[name].push_back(
          diversity(batch, *sources[name]));
  }

  for (const std::string& name : cfg.distance_methods) {
    const SpearmanResult sr =
        spearman(report.diversity_vectors[name], report.performance);
    report.rows.push_back(CorrelationRow{name, sr.rho, sr.p, cfg.repeats});
  }

  std::vector<std::pair<std::string, std::vector<double>>> ordered;
  for (const std::string& name : cfg.distance_methods)
    ordered.emplace_back(name, report.diversity_vectors[name]);
  report.pairs = distance_method_correlation(ordered);
  return report;
}

std::string correlation_report_json(const CorrelationReport& report) {
  json j;
  j["stage"] = to_string(report.stage);
  j["metric"] = to_string(report.metric);
  j["repeats"] = report.repeats;
  j["performance_convention"] = "higher_better";
  j["performance"] = report.performance;
  json div;
  for (const auto& [name, vec] : report.diversity_vectors) div[name] = vec;
  j["diversity"] = div;
  json rows = json::array();
  for (const auto& row : report.rows) {
    json r;
    r["method"] = row.method;
    r["rho"] = row.rho;
    r["p"] = row.p;
    r["n"] = row.n;
    rows.push_back(r);
  }
  j["correlations"] = rows;
  json pairs = json::array();
  for (const auto& pr : report.pairs) {
    json r;
    r["a"] = pr.a;
    r["b"] = pr.b;
    r["rho"] = pr.rho;
    r["p"] = pr.p;
    pairs.push_back(r);
  }
  j["pairwise"] = pairs;
  return j.dump(2) + "\n";
}

std::string correlation_rho_csv(const CorrelationReport& report) {
  std::string out = "method,rho,p,n\n";
  for (const auto& row : report.rows)
    out += row.method + "," + format_double(row.rho) + "," +
           format_double(row.p) + "," + std::to_string(row.n) + "\n";
  return out;
}

std::string correlation_pairs_csv(const CorrelationReport& report) {
  std::string out = "method_a,method_b,rho,p\n";
  for (const auto& pr : report.pairs)
    out += pr.a + "," + pr.b + "," + format_double(pr.rho) + "," +
           format_double(pr.p) + "\n";
  return out;
}

}  // namespace alkit
