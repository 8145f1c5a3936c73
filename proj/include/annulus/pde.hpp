// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "annulus/annulus_param.hpp"

// Backward-parabolic equation for H = 1 - F, marched in tau = -a:
//   d_tau H = (4/3) H'' + b H' + c H - c,  H(., 0) = H(., 2pi) = 0.
namespace annulus::pde {

struct Coefficients {
  double diff;       ///< always 4/3
  double drift;      ///< b(x, a)
  double potential;  ///< c(x, a)
};

/// Fast kernel: Fourier sums in q for q <= kSeriesMaxQ, theta images above.
Coefficients pde_coefficients(double x, const AnnulusParam& p);

/// Slow reference built from zeta, wp and eta directly. Test oracle only.
Coefficients pde_coefficients_reference(double x, const AnnulusParam& p);

/// Drift and potential on many nodes. threads <= 1 runs the plain loop.
void assemble_coefficients(std::span<const double> x, const AnnulusParam& p, std::span<double> drift,
                           std::span<double> potential, int threads);

/// 1 - exp(5 pi min(x, 2pi - x) / (8 a_start)).
double initial_condition(double a_start, double x);

enum class InitKind {
  Bracket,     ///< 1 - geometric mean of the conformal bracket at a_start
  Asymptotic,  ///< initial_condition()
  Custom,      ///< GridConfig::custom_init
};

struct GridConfig {
  int nx = 2048;             ///< cells; nodes are x_j = 2 pi j / nx, j = 0..nx
  double dtau0 = 1e-4;       ///< first step
  double dtau_growth = 1.02;
  double dtau_max = 1e-2;
  double dtau_rel_a2 = 0.025;  ///< if > 0, also dtau <= max(dtau0, dtau_rel_a2 * a^2)
  int substeps = 1;          ///< equal sub-steps per recorded level (nested refinement)
  int rannacher_steps = 4;   ///< implicit-Euler levels before Crank-Nicolson
  bool frozen_q0 = false;    ///< drop every q-sum (exactly solvable limit)
  InitKind init = InitKind::Bracket;
  std::function<double(double)> custom_init;  ///< H(a_start, x) when init == Custom
  double range_eps = 1e-6;   ///< admissible overshoot of [0, 1]
  std::vector<double> required_levels;  ///< a-values the march must land on exactly
  int threads = 0;           ///< for coefficient assembly; 0 = resolve_threads()
};

struct PdeSolution {
  std::vector<double> x;  ///< nx + 1 nodes including both endpoints
  std::vector<double> a;  ///< strictly decreasing levels, a[0] = a_start
  std::vector<double> F;  ///< row-major (level, node); H = 1 - F
  /// Same layout; |extrapolated - coarse| per node when richardson, else empty.
  /// A conservative pointwise error bar.
  std::vector<double> F_err;
  std::string init;
  int nx = 0;
  int substeps = 1;
  double dtau0 = 0.0, dtau_growth = 0.0, dtau_max = 0.0;
  bool frozen_q0 = false;
  bool richardson = false;
  double richardson_correction = 0.0;  ///< max |extrapolated - coarse|
  double max_asymmetry = 0.0;          ///< max |F(x) - F(2pi - x)| over all levels

  std::size_t n_levels() const { return a.size(); }
  double F_at(std::size_t level, std::size_t node) const { return F[level * x.size() + node]; }
  double H_at(std::size_t level, std::size_t node) const { return 1.0 - F_at(level, node); }
};

/// Crank-Nicolson march from a_start to a_end. Coefficients are frozen at the
/// midpoint of every sub-step. Throws NumericalError if F leaves [-eps, 1+eps].
PdeSolution solve(double a_start, double a_end, const GridConfig& cfg = {});

/// Runs (nx, substeps) and (2 nx, 2 substeps) and extrapolates the O(h^2 + dtau^2)
/// error away on the coarse grid.
PdeSolution solve_richardson(double a_start, double a_end, const GridConfig& cfg = {});

/// F = 1 - H by 4-point Lagrange interpolation in x and a (exact at nodes and
/// levels). Throws DomainError outside the table.
double F_lookup(const PdeSolution& sol, double a, double x);
double H_lookup(const PdeSolution& sol, double a, double x);
/// |interpolated F_err| at (a, x); 0 when the solution has no error field.
double F_error_lookup(const PdeSolution& sol, double a, double x);

/// pi^{-1/2} q^{2/3} (1-q^2)^{1/2} prod_{n>=2} (1-q^{2n})^{5/4} sin(x/2).
double galerkin_first_mode(double a, double x);

}  // namespace annulus::pde
