#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace alkit {

// Error taxonomy. The CLI maps these onto its exit-code contract:
// ConfigError -> 2, CapabilityError -> 3, IoError -> 4.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct CapabilityError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};
// Numeric breakdowns (NaN loss, invalid probability rows). The CLI treats
// these as configuration-class failures.
struct NumericError : ConfigError {
  using ConfigError::ConfigError;
};

// Diagnostics go to stderr only; output files stay byte-deterministic.
void warn(const std::string& msg);

// Runs block(lo, hi) over a partition of [0, n) with at most `workers`
// threads. Blocks are contiguous and disjoint, so any computation that
// writes only its own range produces output independent of the worker count.
void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t, std::size_t)>& block);

// Ceiling of fraction*n, guarded against FP rounding: products within 1e-6
// of an integer are snapped to it (0.01 * 62500 must give exactly 625).
long long ceil_fraction(double fraction, long long n);

}  // namespace alkit
