// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "annulus/annulus_param.hpp"

// Chordal SLE(8/3) traces in the upper half-plane by backward composition of
// vertical-slit maps, a hit-or-avoid sampler for the disk C_a, and the
// Komatu-Loewner stepper on the annulus side.
namespace annulus::loewner {

using cplx = std::complex<double>;

inline constexpr double kKappa = 8.0 / 3.0;
inline constexpr std::uint64_t kDefaultSeed = 20240611ULL;

struct DrivingPath {
  double dt = 0.0;
  std::vector<double> values;  ///< W at t = 0, dt, 2 dt, ...
  double kappa = kKappa;
  std::uint64_t seed = 0;
};

struct Trace {
  std::vector<cplx> points;        ///< points[0] is the launch point on the real line
  std::vector<double> capacities;  ///< half-plane capacity time of each point
};

/// sqrt(kappa) B on [0, T] sampled every dt, started at w0.
DrivingPath sample_driving(double T, double dt, std::uint64_t seed, double w0 = 0.0, double kappa = kKappa);

/// Inverse of the vertical-slit map z -> w + sqrt((z-w)^2 + 4 dt), branch in the upper half-plane.
cplx slit_map_inverse(cplx z, double w, double dt);

/// Trace at every step boundary, driving W + x0 held constant over each step.
Trace trace_from_driving(const DrivingPath& d, double x0);

struct Disk {
  cplx center;
  double radius;
};
/// Image of {|z| <= q} under z -> i(1+z)/(1-z).
Disk disk_C(double a);

/// Closed set the trace must avoid: a disk, or a circular arc
/// {center + radius e^{i th}, th in [th0, th1]}.
struct Target {
  enum class Kind { Disk, Arc } kind = Kind::Disk;
  cplx center{0.0, 0.0};
  double radius = 0.0;
  double th0 = 0.0, th1 = 0.0;

  static Target disk(const Disk& d) { return {Kind::Disk, d.center, d.radius, 0.0, 0.0}; }
  static Target arc(cplx c, double r, double th0, double th1) { return {Kind::Arc, c, r, th0, th1}; }
  double distance(cplx z) const;
  /// True if the closed segment [p, q] meets the target.
  bool segment_hits(cplx p, cplx q) const;
  /// max |z - from| over the target.
  double extent_from(cplx from) const;
};

struct DirectConfig {
  double dt_first = 1e-4;     ///< capacity of the first step
  double rel_step = 0.1;      ///< dt <= rel_step * t away from the target
  double near_frac = 0.3;     ///< |new tip - old tip| <= near_frac * dist(old tip, target)
  double dt_min = 1e-12;      ///< no bridge refinement below this
  double hit_eps = 1e-4;      ///< tip within hit_eps * target extent counts as a hit
  double accept_radius = 20;  ///< stop once |tip - x0| > accept_radius * target extent
  double T_max = 1e7;         ///< capacity cap; survivors are counted as avoiding
  long max_steps = 200000;
  /// Where a step's vertical slit sits. With the moment anchor the slit is at
  /// w + (2/3) dw + sqrt(4 kappa dt / 45) N, a draw of int 2s W(s) ds given the
  /// endpoint: the tip a step with that driving would reach to first order.
  /// Otherwise the slit sits at w + dw (continuous trace, O(sqrt dt) tip error).
  bool moment_anchor = true;
};

struct PathOutcome {
  bool hit = false;
  bool accepted_early = false;
  bool truncated = false;  ///< T_max or step cap reached without decision
  long steps = 0;
  long rejections = 0;
};

/// One trace from x0 to infinity tested against `target`.
PathOutcome simulate_avoid(const Target& target, double x0, const DirectConfig& cfg, std::uint64_t seed,
                           double kappa = kKappa);

struct DirectEstimate {
  double mean = 0.0;  ///< fraction of avoiding traces
  double stderr_ = 0.0;
  long n_paths = 0;
  long n_hit = 0;
  long n_accepted_early = 0;
  long n_truncated = 0;
  double mean_steps = 0.0;
  std::uint64_t seed = 0;
};

DirectEstimate estimate_avoid(const Target& target, double x0, long n_paths, const DirectConfig& cfg = {},
                              std::uint64_t seed = kDefaultSeed, int threads = 0);

/// F(a, x) as the probability that SLE in H from cot(x/2) avoids disk_C(a).
DirectEstimate estimate_F_direct(double a, double x, long n_paths, const DirectConfig& cfg = {},
                                 std::uint64_t seed = kDefaultSeed, int threads = 0);

/// Validation: SLE from c to -c avoiding i(0, d] has probability (c^2/(c^2+d^2))^{5/4}.
/// Sampled in the frame z -> (z - c)/(z + c), where the slit becomes an arc of the unit circle.
DirectEstimate estimate_slit_validation(double c, double d, long n_paths, const DirectConfig& cfg = {},
                                        std::uint64_t seed = kDefaultSeed, int threads = 0);

struct KomatuState {
  double a;                    ///< current log-modulus
  std::vector<cplx> samples;   ///< tracked images f(z)
  double y;                    ///< driving value
};

/// One classical RK4 step of d_a f = Xi_2(f, y | a) over [a, a + da].
KomatuState komatu_step(const KomatuState& s, double da);

}  // namespace annulus::loewner
