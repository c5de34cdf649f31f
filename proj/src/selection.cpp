#include "alkit/selection.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace alkit {

void validate_selection(const Selection& s, std::span<const int> candidates,
                        int budget) {
  const std::size_t want =
      std::min(static_cast<std::size_t>(budget), candidates.size());
  if (s.indices.size() != want)
    throw ConfigError("selection: wrong size " +
                      std::to_string(s.indices.size()) + ", expected " +
                      std::to_string(want));
  if (s.scores.size() != s.indices.size())
    throw ConfigError("selection: score list out of sync");
  std::unordered_set<int> cand(candidates.begin(), candidates.end());
  std::unordered_set<int> seen;
  for (int i : s.indices) {
    if (!cand.count(i))
      throw ConfigError("selection: index " + std::to_string(i) +
                        " not in candidate set");
    if (!seen.insert(i).second)
      throw ConfigError("selection: duplicate index " + std::to_string(i));
  }
}

Selection select_top(std::span<const double> scores,
                     std::span<const int> candidates, int budget,
                     std::string method, std::uint64_t seed) {
  if (candidates.empty()) throw ConfigError("select_top: empty candidate set");
  if (scores.size() != candidates.size())
    throw ConfigError("select_top: scores/candidates length mismatch");
  if (budget < 1) throw ConfigError("select_top: budget must be >= 1");
  for (double s : scores)
    if (std::isnan(s)) throw NumericError("select_top: NaN score");

  std::vector<std::size_t> order(candidates.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] < scores[b];
    return candidates[a] < candidates[b];
  });

  std::size_t take = static_cast<std::size_t>(budget);
  if (take > candidates.size()) {
    warn("select_top: budget " + std::to_string(budget) + " exceeds " +
         std::to_string(candidates.size()) + " candidates, returning all");
    take = candidates.size();
  }

  Selection sel;
  sel.method = std::move(method);
  sel.seed = seed;
  sel.indices.reserve(take);
  sel.scores.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    sel.indices.push_back(candidates[order[i]]);
    sel.scores.push_back(scores[order[i]]);
  }
  return sel;
}

}  // namespace alkit
