#pragma once

#include <optional>
#include <span>
#include <vector>

#include "alkit/distance.hpp"
#include "alkit/feature.hpp"
#include "alkit/matrix.hpp"
#include "alkit/rng.hpp"
#include "alkit/selection.hpp"
#include "alkit/uncertainty.hpp"

namespace alkit {

// Uniform sample without replacement; indices come back in draw order and
// scores carry the draw position.
Selection select_random(std::span<const int> candidates, int budget, Rng& rng);

struct ClusterResult {
  Matrix centroids;             // k x d
  std::vector<int> assignment;  // row -> nearest centroid, ties to smaller
  double inertia = 0.0;         // sum of squared distances to assigned centroid
};

// D^2-weighted seeding: first row uniform, then each next seed picked with
// probability proportional to its squared distance to the nearest chosen
// seed. Zero total weight (all remaining rows duplicate a seed) falls back
// to the smallest unchosen row. Returns k distinct row indices in pick order.
std::vector<std::size_t> kmeans_pp_rows(const Matrix& rows, int k, Rng& rng);

// Lloyd iterations from D^2 seeding; stops when every centroid moves less
// than tol or after max_iters. A cluster that empties is re-seeded to the
// point farthest from its assigned centroid.
ClusterResult kmeans(const Matrix& rows, int k, Rng& rng, int max_iters = 100,
                     double tol = 1e-6);
ClusterResult kmeans(const FeatureView& features, int k, Rng& rng,
                     int max_iters = 100, double tol = 1e-6);

// k = budget clusters over the candidate rows; per cluster the member
// nearest its centroid is returned. Requires budget <= |candidates|.
Selection select_kmeans(const FeatureView& features,
                        std::span<const int> candidates, int budget, Rng& rng);

// Per-candidate last-layer gradient under the pseudo-label argmax p: row =
// flatten over classes c of (p_c - [c == argmax]) * feat.
struct GradientEmbedding {
  Matrix m;  // n x (classes * feature_width)
  std::vector<int> item_ids;
};

GradientEmbedding gradient_embeddings(const ProbMatrix& probs,
                                      const FeatureView& penult);

// D^2 seeding over the gradient embeddings of the candidates; scores carry
// each pick's squared distance to the seeds chosen before it.
Selection select_badge(const ProbMatrix& probs, const FeatureView& penult,
                       std::span<const int> candidates, int budget, Rng& rng);

// Greedy max-min: repeatedly take the candidate whose distance to the
// labeled-plus-selected set is largest (ties to smaller index). An empty
// labeled set is seeded by the source's seed_weight ranking.
Selection select_kcenter(const DistanceSource& source,
                         std::span<const int> labeled,
                         std::span<const int> candidates, int budget,
                         int workers = 1);

struct CoresetSelection {
  Selection selection;
  // Max over unselected non-outlier candidates of their distance to the
  // labeled-plus-selected set.
  double coverage_radius = 0.0;
  std::vector<int> outliers;  // candidates past the bound when greedy ended
};

// Greedy max-min with an optional distance upper bound: candidates whose
// current min distance exceeds the bound are skipped by the maximization.
// init_source seeds the distances to the labeled set; step_source drives the
// greedy updates, which is how the mixed embedding-distance/sequence-metric
// variant is expressed. Pass the same source twice for the plain form.
CoresetSelection select_coreset(const DistanceSource& init_source,
                                const DistanceSource& step_source,
                                std::span<const int> labeled,
                                std::span<const int> candidates, int budget,
                                std::optional<double> outlier_bound = {},
                                int workers = 1);
CoresetSelection select_coreset(const DistanceSource& source,
                                std::span<const int> labeled,
                                std::span<const int> candidates, int budget,
                                std::optional<double> outlier_bound = {},
                                int workers = 1);

}  // namespace alkit
