#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "alkit/common.hpp"

namespace alkit {

// An ordered batch of selected pool indices with their acquisition scores.
struct Selection {
  std::vector<int> indices;
  std::vector<double> scores;  // parallel to indices
  std::string method;
  std::uint64_t seed = 0;
};

// Checks the type invariants: distinct indices, all drawn from `candidates`,
// size = min(budget, |candidates|), score list in sync.
void validate_selection(const Selection& s, std::span<const int> candidates,
                        int budget);

// The `budget` candidates with smallest score; ties broken by smaller pool
// index, so the result does not depend on the input ordering. Saturates (with
// a warning) when budget exceeds the candidate count.
Selection select_top(std::span<const double> scores,
                     std::span<const int> candidates, int budget,
                     std::string method = "", std::uint64_t seed = 0);

}  // namespace alkit
