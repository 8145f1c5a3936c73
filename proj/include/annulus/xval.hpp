// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "annulus/loewner.hpp"
#include "annulus/mc.hpp"
#include "annulus/pde.hpp"

// Cross-method comparison of F and least-squares fits of its asymptotic laws.
namespace annulus::xval {

struct MethodConfig {
  double a_start = -0.02;        ///< PDE start level
  pde::GridConfig grid{};
  bool richardson = true;        ///< PDE via solve_richardson
  long mc_paths = 100000;        ///< 0 skips the Feynman-Kac estimate
  mc::LegendreConfig legendre{};
  std::uint64_t mc_seed = mc::kDefaultSeed;
  double mc_max_a = -0.05;       ///< above this the Feynman-Kac estimate is not attempted
  long direct_paths = 0;         ///< 0 skips the direct SLE estimate
  loewner::DirectConfig direct{};
  std::uint64_t direct_seed = loewner::kDefaultSeed;
  int threads = 0;
};

/// Missing estimates are NaN; `notes` says why.
struct ComparisonRow {
  double a = 0.0, x = 0.0;
  double f_pde = 0.0;
  double pde_err = 0.0;  ///< Richardson error bar on f_pde (0 without Richardson)
  double f_mc = 0.0, mc_stderr = 0.0;
  double f_direct = 0.0, direct_stderr = 0.0;
  double bracket_lo = 0.0, bracket_hi = 0.0;
  bool pde_in_bracket = false;  ///< f_pde within [bracket_lo - pde_err, bracket_hi + pde_err]
  bool mc_agrees = false;      ///< |f_pde - f_mc| <= 3 mc_stderr
  bool direct_agrees = false;  ///< |f_direct - f_mc| <= 3 combined stderr
  bool consistent = false;     ///< pde_in_bracket and mc_agrees
  std::string notes;
};

/// One row per (a, x), in input order. A single PDE march covers every a.
std::vector<ComparisonRow> compare_methods(std::span<const std::pair<double, double>> points,
                                           const MethodConfig& cfg = {});

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double target = 0.0;
  double rel_error = 0.0;  ///< |slope / target - 1|
  std::vector<double> xs, ys;
};

/// ln(bracket point estimate of F) against x/a; target 5 pi/8. The point
/// estimate is the geometric mean of the bracket, or its lower end.
FitResult fit_q1_slope(double x, std::span<const double> a_values, bool lower_only = false);

/// ln H(a, x) against a over [a_lo, a_hi] sampled at n levels; target 2/3.
FitResult fit_q0_exponent(double x, const pde::PdeSolution& sol, double a_lo = -4.0, double a_hi = -2.0,
                          int n = 21);

/// H(a, pi/2) / H(a, pi), target 1/2 as a -> -inf.
double q0_shape_ratio(const pde::PdeSolution& sol, double a);

/// ln joint_hit_prob(u(a, pi), L(q)) against pi^2/a; target 1.
FitResult fit_joint_hit_rate(std::span<const double> a_values);

/// joint_hit_prob(u(a, pi), L) / ((5/256)(1 - L)^4), tends to 1 as a -> 0.
double joint_prefactor_ratio(double a);

/// ln of the two-term sum in the lower bracket (without the change factor) at
/// x = pi against pi/a; target 5 pi/8. Both terms coincide at x = pi.
FitResult fit_lower_sum_rate(std::span<const double> a_values);

/// Report-only: slope of 2 ln(bracket midpoint at pi) against pi^2/a, target 5/4.
FitResult werner_check(std::span<const double> a_values);

}  // namespace annulus::xval
