// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "annulus/annulus_param.hpp"
#include "annulus/pde.hpp"

// Feynman-Kac estimator for F(a, x) along the Legendre diffusion
//   dY = -sqrt(8/3) dB - (2/3) cot(Y/2) db,  b increasing from a to 0,
// absorbed at {0, 2pi}.
namespace annulus::mc {

inline constexpr std::uint64_t kDefaultSeed = 20240607ULL;

enum class Scheme {
  Split,  ///< half drift (exact flow), noise, half drift; trapezoid weight
  Euler,  ///< Euler-Maruyama, midpoint weight. First-order bias near the boundary
};

struct LegendreConfig {
  Scheme scheme = Scheme::Split;
  double db_base = 4e-3;     ///< largest step in b
  double eps_abs = 1e-5;     ///< absorption band around 0 and 2pi
  double kill_delta = 1e-3;  ///< paths alive at b > -kill_delta score 0
  double step_frac = 0.1;    ///< db <= step_frac * (3/8) * dist^2
  long max_steps = 20'000'000;
  bool shifted_integrand = false;  ///< add the constant 1/12 (diagnostic only, biased)
};

struct McEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  long n_paths = 0;
  long n_absorbed = 0;
  long n_killed = 0;
  long n_invalid = 0;  ///< step cap hit; excluded from mean
  std::uint64_t seed = 0;
};

/// One Euler-Maruyama step; crossings of 0 or 2pi are clamped onto the boundary.
double legendre_step(double y, double b, double db, double gaussian);

/// Exact flow of dY = -(2/3) cot(Y/2) db over a step h: cos(Y/2) grows like
/// e^{h/3}. Returns false (y set to 0 or 2pi) when the flow reaches the boundary.
bool drift_flow(double& y, double h);

/// One Strang step: drift_flow(db/2), noise, drift_flow(db/2). Clamped like legendre_step.
double split_step(double y, double db, double gaussian);

/// Killing rate V(y, b) = -sum_{n>=1} 2n q^{2n}/(1-q^{2n}) (1 - cos n y), q = e^b.
/// Nonpositive; equals -(wp(y) - csc^2(y/2)/4) - 1/12.
double functional_increment(double y, const AnnulusParam& pb);
/// The same rate through wp from the special-function module. Slow; oracle.
double functional_increment_reference(double y, const AnnulusParam& pb);

/// [theta1_over_sin(0) / theta1_over_sin(x)]^{3/4} at nome Q.
double prefactor(double x, const AnnulusParam& P);

struct PathResult {
  bool absorbed = false;
  bool invalid = false;
  double weight = 0.0;  ///< exp(integral of V) if absorbed, else 0
  double b_end = 0.0;
  long steps = 0;
};

/// State recorded when a path crosses a checkpoint level.
struct CheckpointState {
  bool absorbed;   ///< absorbed at or before the checkpoint
  double y;        ///< position at the checkpoint (meaningless if absorbed)
  double log_w;    ///< integral of V up to min(checkpoint, absorption)
};

/// `mirror` flips every Gaussian. simulate_path(2pi - x, s, mirror=true) is
/// the exact reflection of simulate_path(x, s).
PathResult simulate_path(double a0, double x, const LegendreConfig& cfg, std::uint64_t seed,
                         bool mirror = false, const std::vector<double>* checkpoints = nullptr,
                         std::vector<CheckpointState>* states = nullptr);

/// prefactor(x, e^a) times the mean path weight. Path i uses seed
/// path_seed(seed, i); the reduction runs in index order, so the result does
/// not depend on `threads`.
McEstimate estimate_F_feynman_kac(double a, double x, long n_paths, const LegendreConfig& cfg = {},
                                  std::uint64_t seed = kDefaultSeed, int threads = 0, bool mirror = false);

struct MartingaleRow {
  double a;          ///< checkpoint
  double mean;       ///< sample mean of M_{a0, a}
  double stderr_;
  double deviation;  ///< (mean - F(a0, x)) / stderr
};

struct MartingaleReport {
  double f0;  ///< F(a0, x) from the PDE table
  std::vector<MartingaleRow> rows;
  long n_paths;
  std::uint64_t seed;
};

/// Empirical E[M_{a0,a}] at each checkpoint, F taken from `sol`.
MartingaleReport martingale_check(double a0, double x, const std::vector<double>& checkpoints,
                                  const pde::PdeSolution& sol, long n_paths, const LegendreConfig& cfg = {},
                                  std::uint64_t seed = kDefaultSeed, int threads = 0);

}  // namespace annulus::mc
