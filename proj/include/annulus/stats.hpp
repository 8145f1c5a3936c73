// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>

namespace annulus::stats {

struct MeanErr {
  double mean;
  double stderr_;  ///< sample standard deviation / sqrt(n)
};

/// Two-pass mean and standard error, summed in index order.
MeanErr mean_stderr(std::span<const double> v);

struct LinearFit {
  double slope;
  double intercept;
  double r2;
};

/// Ordinary least squares y ~ intercept + slope*x.
LinearFit ols(std::span<const double> x, std::span<const double> y);

}  // namespace annulus::stats
