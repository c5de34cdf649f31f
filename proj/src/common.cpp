#include "alkit/common.hpp"

#include <cmath>
#include <cstdio>
#include <thread>
#include <vector>

namespace alkit {

void warn(const std::string& msg) {
  std::fprintf(stderr, "[warn] %s\n", msg.c_str());
  std::fflush(stderr);
}

void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t, std::size_t)>& block) {
  if (n == 0) return;
  std::size_t w = workers < 1 ? 1 : static_cast<std::size_t>(workers);
  if (w > n) w = n;
  if (w == 1) {
    block(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(w);
  const std::size_t chunk = (n + w - 1) / w;
  for (std::size_t t = 0; t < w; ++t) {
    const std::size_t lo = t * chunk;
    const std::size_t hi = lo + chunk < n ? lo + chunk : n;
    if (lo >= hi) break;
    pool.emplace_back([&block, lo, hi] { block(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

long long ceil_fraction(double fraction, long long n) {
  const double x = fraction * static_cast<double>(n);
  const double r = std::nearbyint(x);
  if (std::fabs(x - r) < 1e-6 * std::fmax(1.0, std::fabs(x))) {
    return static_cast<long long>(r);
  }
  return static_cast<long long>(std::ceil(x));
}

}  // namespace alkit
