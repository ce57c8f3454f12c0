#pragma once

// Independent reference implementations used only by tests: quadrature,
// distribution tails and a Poisson sampler that never touches the library's
// generator internals.

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "nhbt/rng.hpp"

namespace testor {

/// Composite Simpson rule over [a, b] with n subintervals (n made even).
inline double simpson(const std::function<double(double)>& f, double a,
                      double b, int n) {
  if (n % 2 != 0) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) {
    s += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  }
  return s * h / 3.0;
}

inline double normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

/// Exact-distribution Poisson sampler (chunked Knuth), independent of the
/// library's variate code paths.
inline std::uint64_t poisson(nhbt::Rng& rng, double mean) {
  std::uint64_t total = 0;
  while (mean > 32.0) {
    // Poisson(m) = Poisson(32) + Poisson(m - 32), independent.
    double l = std::exp(-32.0);
    std::uint64_t k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= rng.uniform_pos();
    } while (p > l);
    total += k - 1;
    mean -= 32.0;
  }
  const double l = std::exp(-mean);
  std::uint64_t k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= rng.uniform_pos();
  } while (p > l);
  return total + k - 1;
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (const double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double variance_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (const double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace testor
