#include "alkit/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <unordered_set>

namespace alkit {

namespace {

// Sorted, duplicate-checked copy of a candidate set so results cannot depend
// on caller ordering.
std::vector<int> canonical(std::span<const int> candidates,
                           const char* who) {
  if (candidates.empty())
    throw ConfigError(std::string(who) + ": empty candidate set");
  std::vector<int> c(candidates.begin(), candidates.end());
  std::sort(c.begin(), c.end());
  if (std::adjacent_find(c.begin(), c.end()) != c.end())
    throw ConfigError(std::string(who) + ": duplicate candidate index");
  return c;
}

double sqdist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

Selection select_random(std::span<const int> candidates, int budget,
                        Rng& rng) {
  std::vector<int> cand = canonical(candidates, "select_random");
  if (budget < 1) throw ConfigError("select_random: budget must be >= 1");
  int take = budget;
  if (take > static_cast<int>(cand.size())) {
    warn("select_random: budget " + std::to_string(budget) + " exceeds " +
         std::to_string(cand.size()) + " candidates, returning all");
    take = static_cast<int>(cand.size());
  }
  auto draws =
      rng.sample_without_replacement(static_cast<int>(cand.size()), take);
  Selection sel;
  sel.method = "random";
  sel.seed = rng.seed();
  sel.indices.reserve(draws.size());
  sel.scores.reserve(draws.size());
  for (std::size_t i = 0; i < draws.size(); ++i) {
    sel.indices.push_back(cand[static_cast<std::size_t>(draws[i])]);
    sel.scores.push_back(static_cast<double>(i));
  }
  return sel;
}

std::vector<std::size_t> kmeans_pp_rows(const Matrix& rows, int k, Rng& rng) {
  const std::size_t n = rows.rows();
  if (k < 1) throw ConfigError("kmeans: k must be >= 1");
  if (static_cast<std::size_t>(k) > n)
    throw ConfigError("kmeans: k " + std::to_string(k) + " exceeds " +
                      std::to_string(n) + " rows");

  std::vector<std::size_t> chosen;
  chosen.reserve(static_cast<std::size_t>(k));
  std::vector<char> taken(n, 0);

  const std::size_t first = static_cast<std::size_t>(rng.uniform_int(n));
  chosen.push_back(first);
  taken[first] = 1;

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i)
    d2[i] = taken[i] ? 0.0 : sqdist(rows.row(i), rows.row(first));

  while (chosen.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = n;
    if (total > 0.0) {
      const double r = rng.uniform() * total;
      double cum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        cum += d2[i];
        if (r < cum) {
          pick = i;
          break;
        }
      }
      if (pick == n) {  // accumulated rounding pushed r past the last mass
        for (std::size_t i = n; i-- > 0;)
          if (!taken[i]) {
            pick = i;
            break;
          }
      }
    } else {
      for (std::size_t i = 0; i < n; ++i)
        if (!taken[i]) {
          pick = i;
          break;
        }
    }
    taken[pick] = 1;
    d2[pick] = 0.0;
    chosen.push_back(pick);
    for (std::size_t i = 0; i < n; ++i)
      if (!taken[i]) d2[i] = std::min(d2[i], sqdist(rows.row(i), rows.row(pick)));
  }
  return chosen;
}

ClusterResult kmeans(const Matrix& rows, int k, Rng& rng, int max_iters,
                     double tol) {
  const std::size_t n = rows.rows();
  const std::size_t d = rows.cols();
  if (n == 0) throw ConfigError("kmeans: empty input");
  if (max_iters < 1) throw ConfigError("kmeans: max_iters must be >= 1");
  if (!(tol >= 0.0)) throw ConfigError("kmeans: tol must be >= 0");

  const auto seeds = kmeans_pp_rows(rows, k, rng);
  const std::size_t kk = seeds.size();
  Matrix centroids(kk, d);
  for (std::size_t c = 0; c < kk; ++c)
    for (std::size_t j = 0; j < d; ++j)
      centroids.at(c, j) = rows.at(seeds[c], j);

  std::vector<int> assignment(n, 0);
  std::vector<std::size_t> counts(kk);
  Matrix sums(kk, d);

  for (int iter = 0; iter < max_iters; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = sqdist(rows.row(i), centroids.row(0));
      for (std::size_t c = 1; c < kk; ++c) {
        const double v = sqdist(rows.row(i), centroids.row(c));
        if (v < best_d) {
          best_d = v;
          best = c;
        }
      }
      assignment[i] = static_cast<int>(best);
    }

    std::fill(counts.begin(), counts.end(), 0);
    std::fill(sums.data().begin(), sums.data().end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(assignment[i]);
      ++counts[c];
      auto srow = sums.row(c);
      auto rrow = rows.row(i);
      for (std::size_t j = 0; j < d; ++j) srow[j] += rrow[j];
    }

    Matrix next(kk, d);
    for (std::size_t c = 0; c < kk; ++c) {
      if (counts[c] > 0) {
        for (std::size_t j = 0; j < d; ++j)
          next.at(c, j) = sums.at(c, j) / static_cast<double>(counts[c]);
      } else {
        for (std::size_t j = 0; j < d; ++j) next.at(c, j) = centroids.at(c, j);
      }
    }

    bool reseeded = false;
    std::vector<char> grabbed(n, 0);
    for (std::size_t c = 0; c < kk; ++c) {
      if (counts[c] > 0) continue;
      // Farthest point from its own (next) centroid becomes this cluster.
      std::size_t far = n;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (grabbed[i]) continue;
        const auto a = static_cast<std::size_t>(assignment[i]);
        if (counts[a] <= 1) continue;  // do not empty another cluster
        const double v = sqdist(rows.row(i), next.row(a));
        if (v > far_d) {
          far_d = v;
          far = i;
        }
      }
      if (far == n) continue;  // nothing left to donate
      grabbed[far] = 1;
      --counts[static_cast<std::size_t>(assignment[far])];
      counts[c] = 1;
      assignment[far] = static_cast<int>(c);
      for (std::size_t j = 0; j < d; ++j) next.at(c, j) = rows.at(far, j);
      reseeded = true;
    }

    double shift = 0.0;
    for (std::size_t c = 0; c < kk; ++c)
      shift = std::max(shift, sqdist(centroids.row(c), next.row(c)));
    centroids = std::move(next);
    if (!reseeded && std::sqrt(shift) < tol) break;
  }

  ClusterResult result;
  result.centroids = std::move(centroids);
  result.assignment.resize(n);
  result.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    double best_d = sqdist(rows.row(i), result.centroids.row(0));
    for (std::size_t c = 1; c < kk; ++c) {
      const double v = sqdist(rows.row(i), result.centroids.row(c));
      if (v < best_d) {
        best_d = v;
        best = c;
      }
    }
    result.assignment[i] = static_cast<int>(best);
    result.inertia += best_d;
  }
  return result;
}

ClusterResult kmeans(const FeatureView& features, int k, Rng& rng,
                     int max_iters, double tol) {
  features.validate();
  return kmeans(features.m, k, rng, max_iters, tol);
}

namespace {

// Rows of `view` for the given sorted candidate ids, resolved through the
// view's id map.
Matrix candidate_rows(const FeatureView& view, const std::vector<int>& cand,
                      const char* who) {
  std::unordered_map<int, std::size_t> index;
  index.reserve(view.item_ids.size());
  for (std::size_t i = 0; i < view.item_ids.size(); ++i)
    index.emplace(view.item_ids[i], i);
  Matrix out(cand.size(), view.m.cols());
  for (std::size_t r = 0; r < cand.size(); ++r) {
    auto it = index.find(cand[r]);
    if (it == index.end())
      throw ConfigError(std::string(who) + ": no feature row for candidate " +
                        std::to_string(cand[r]));
    auto row = view.m.row(it->second);
    for (std::size_t j = 0; j < row.size(); ++j) out.at(r, j) = row[j];
  }
  return out;
}

}  // namespace

Selection select_kmeans(const FeatureView& features,
                        std::span<const int> candidates, int budget,
                        Rng& rng) {
  std::vector<int> cand = canonical(candidates, "select_kmeans");
  if (budget < 1) throw ConfigError("kmeans: k must be >= 1");
  if (budget > static_cast<int>(cand.size()))
    throw ConfigError("kmeans: k " + std::to_string(budget) + " exceeds " +
                      std::to_string(cand.size()) + " rows");
  Matrix rows = candidate_rows(features, cand, "select_kmeans");
  ClusterResult km = kmeans(rows, budget, rng);

  const std::size_t kk = km.centroids.rows();
  std::vector<std::size_t> rep(kk, rows.rows());
  std::vector<double> rep_d(kk, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    const auto c = static_cast<std::size_t>(km.assignment[i]);
    const double v = sqdist(rows.row(i), km.centroids.row(c));
    if (v < rep_d[c]) {  // strict keeps the smaller row (= smaller pool id)
      rep_d[c] = v;
      rep[c] = i;
    }
  }

  Selection sel;
  sel.method = "kmeans";
  sel.seed = rng.seed();
  std::vector<char> used(rows.rows(), 0);
  for (std::size_t c = 0; c < kk; ++c) {
    if (rep[c] == rows.rows()) continue;  // empty cluster
    used[rep[c]] = 1;
    sel.indices.push_back(cand[rep[c]]);
    sel.scores.push_back(std::sqrt(rep_d[c]));
  }
  if (sel.indices.size() < static_cast<std::size_t>(budget)) {
    warn("select_kmeans: " +
         std::to_string(budget - static_cast<int>(sel.indices.size())) +
         " empty clusters, filling by index");
    for (std::size_t i = 0;
         i < rows.rows() &&
         sel.indices.size() < static_cast<std::size_t>(budget);
         ++i) {
      if (used[i]) continue;
      used[i] = 1;
      sel.indices.push_back(cand[i]);
      sel.scores.push_back(std::sqrt(
          sqdist(rows.row(i),
                 km.centroids.row(static_cast<std::size_t>(km.assignment[i])))));
    }
  }
  return sel;
}

GradientEmbedding gradient_embeddings(const ProbMatrix& probs,
                                      const FeatureView& penult) {
  if (probs.rows() != penult.m.rows())
    throw ConfigError("gradient_embeddings: probs/features row mismatch");
  const std::size_t n = probs.rows();
  const std::size_t c_count = probs.cols();
  const std::size_t h = penult.m.cols();

  GradientEmbedding ge;
  ge.item_ids = penult.item_ids;
  ge.m = Matrix(n, c_count * h);
  for (std::size_t r = 0; r < n; ++r) {
    auto p = probs.row(r);
    auto feat = penult.m.row(r);
    std::size_t yhat = 0;
    for (std::size_t c = 1; c < c_count; ++c)
      if (p[c] > p[yhat]) yhat = c;  // tie keeps the smaller label
    auto out = ge.m.row(r);
    for (std::size_t c = 0; c < c_count; ++c) {
      const double coef = p[c] - (c == yhat ? 1.0 : 0.0);
      for (std::size_t j = 0; j < h; ++j) out[c * h + j] = coef * feat[j];
    }
  }
  return ge;
}

Selection select_badge(const ProbMatrix& probs, const FeatureView& penult,
                       std::span<const int> candidates, int budget, Rng& rng) {
  std::vector<int> cand = canonical(candidates, "select_badge");
  if (budget < 1) throw ConfigError("kmeans: k must be >= 1");
  if (budget > static_cast<int>(cand.size()))
    throw ConfigError("kmeans: k " + std::to_string(budget) + " exceeds " +
                      std::to_string(cand.size()) + " rows");
  if (probs.rows() != penult.m.rows())
    throw ConfigError("select_badge: probs/features row mismatch");

  // Gradient rows for the candidates only, in canonical order.
  FeatureView sub;
  sub.kind = penult.kind;
  sub.item_ids = cand;
  sub.m = candidate_rows(penult, cand, "select_badge");
  std::unordered_map<int, std::size_t> index;
  for (std::size_t i = 0; i < penult.item_ids.size(); ++i)
    index.emplace(penult.item_ids[i], i);
  Matrix sub_p(cand.size(), probs.cols());
  for (std::size_t r = 0; r < cand.size(); ++r) {
    auto row = probs.row(index.at(cand[r]));
    for (std::size_t c = 0; c < row.size(); ++c) sub_p.at(r, c) = row[c];
  }
  GradientEmbedding ge =
      gradient_embeddings(ProbMatrix::from(std::move(sub_p)), sub);

  const auto picks = kmeans_pp_rows(ge.m, budget, rng);
  Selection sel;
  sel.method = "badge";
  sel.seed = rng.seed();
  sel.indices.reserve(picks.size());
  sel.scores.reserve(picks.size());
  for (std::size_t i = 0; i < picks.size(); ++i) {
    sel.indices.push_back(cand[picks[i]]);
    double d2 = 0.0;  // squared distance to the seeds picked earlier
    for (std::size_t j = 0; j < i; ++j) {
      const double v = sqdist(ge.m.row(picks[i]), ge.m.row(picks[j]));
      d2 = j == 0 ? v : std::min(d2, v);
    }
    sel.scores.push_back(d2);
  }
  return sel;
}

namespace {

struct GreedyOutcome {
  Selection sel;
  double radius = 0.0;
  std::vector<int> outliers;
};

GreedyOutcome greedy_maxmin(const DistanceSource& init_source,
                            const DistanceSource& step_source,
                            std::span<const int> labeled,
                            std::span<const int> candidates, int budget,
                            std::optional<double> bound, int workers,
                            const char* who) {
  std::vector<int> cand = canonical(candidates, who);
  if (budget < 1)
    throw ConfigError(std::string(who) + ": budget must be >= 1");
  {
    std::unordered_set<int> lab(labeled.begin(), labeled.end());
    for (int c : cand)
      if (lab.count(c))
        throw ConfigError(std::string(who) + ": candidate " +
                          std::to_string(c) + " is already labeled");
  }
  if (bound && !(*bound > 0.0))
    throw ConfigError(std::string(who) + ": outlier bound must be > 0");

  const std::size_t n = cand.size();
  std::size_t take = static_cast<std::size_t>(budget);
  if (take > n) {
    warn(std::string(who) + ": budget " + std::to_string(budget) +
         " exceeds " + std::to_string(n) + " candidates, returning all");
    take = n;
  }

  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  if (!labeled.empty()) {
    parallel_for(n, workers, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i)
        for (int l : labeled)
          min_dist[i] = std::min(min_dist[i], init_source.dist(cand[i], l));
    });
  }

  std::vector<char> taken(n, 0);
  GreedyOutcome out;
  out.sel.method = who;

  for (std::size_t step = 0; step < take; ++step) {
    std::size_t pick = n;
    if (labeled.empty() && step == 0) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i) {
        const double w = init_source.seed_weight(cand[i]);
        if (w > best) {
          best = w;
          pick = i;
        }
      }
      out.sel.scores.push_back(0.0);
    } else {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i) {
        if (taken[i]) continue;
        if (bound && min_dist[i] > *bound) continue;
        if (min_dist[i] > best) {
          best = min_dist[i];
          pick = i;
        }
      }
      if (pick == n) {
        warn(std::string(who) + ": every remaining candidate exceeds the " +
             "outlier bound, stopping after " +
             std::to_string(out.sel.indices.size()) + " picks");
        break;
      }
      out.sel.scores.push_back(min_dist[pick]);
    }
    taken[pick] = 1;
    out.sel.indices.push_back(cand[pick]);
    const int picked_id = cand[pick];
    parallel_for(n, workers, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        if (taken[i]) continue;
        min_dist[i] =
            std::min(min_dist[i], step_source.dist(cand[i], picked_id));
      }
    });
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (taken[i]) continue;
    if (bound && min_dist[i] > *bound)
      out.outliers.push_back(cand[i]);
    else if (std::isfinite(min_dist[i]))
      out.radius = std::max(out.radius, min_dist[i]);
  }
  return out;
}

}  // namespace

Selection select_kcenter(const DistanceSource& source,
                         std::span<const int> labeled,
                         std::span<const int> candidates, int budget,
                         int workers) {
  return greedy_maxmin(source, source, labeled, candidates, budget,
                       std::nullopt, workers, "kcenter")
      .sel;
}

CoresetSelection select_coreset(const DistanceSource& init_source,
                                const DistanceSource& step_source,
                                std::span<const int> labeled,
                                std::span<const int> candidates, int budget,
                                std::optional<double> outlier_bound,
                                int workers) {
  GreedyOutcome out =
      greedy_maxmin(init_source, step_source, labeled, candidates, budget,
                    outlier_bound, workers, "coreset");
  CoresetSelection cs;
  cs.selection = std::move(out.sel);
  cs.coverage_radius = out.radius;
  cs.outliers = std::move(out.outliers);
  return cs;
}

CoresetSelection select_coreset(const DistanceSource& source,
                                std::span<const int> labeled,
                                std::span<const int> candidates, int budget,
                                std::optional<double> outlier_bound,
                                int workers) {
  return select_coreset(source, source, labeled, candidates, budget,
                        outlier_bound, workers);
}

}  // namespace alkit
