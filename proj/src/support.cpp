// SPDX-License-Identifier: Apache-2.0
#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include "annulus/error.hpp"
#include "annulus/parallel.hpp"
#include "annulus/stats.hpp"

namespace annulus {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("ANNULUS_SLE_THREADS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0 && n < 4096) return static_cast<int>(n);
    throw DomainError(std::string("ANNULUS_SLE_THREADS must be a positive integer, got '") + env + "'");
  }
  return std::max(1, omp_get_max_threads());
}

namespace stats {

MeanErr mean_stderr(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n == 0) return {0.0, 0.0};
  double s = 0.0;
  for (double x : v) s += x;
  const double m = s / static_cast<double>(n);
  if (n == 1) return {m, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  const double var = ss / static_cast<double>(n - 1);
  return {m, std::sqrt(var / static_cast<double>(n))};
}

LinearFit ols(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("ols needs >= 2 paired samples");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw DomainError("ols: abscissae are all equal");
  const double slope = sxy / sxx;
  const double r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return {slope, my - slope * mx, r2};
}

}  // namespace stats
}  // namespace annulus
