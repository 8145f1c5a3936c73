// SPDX-License-Identifier: Apache-2.0
#include "annulus/loewner.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "annulus/error.hpp"
#include "annulus/parallel.hpp"
#include "annulus/special_fn.hpp"
#include "annulus/stats.hpp"

namespace annulus::loewner {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoThirds = 2.0 / 3.0;
// Var(int_0^1 2s W ds | W(1)) for a standard Brownian W.
constexpr double kMomentVar = 4.0 / 45.0;

// Root of u with nonnegative imaginary part; on the real axis the sign of `side` picks the branch.
inline cplx upper_sqrt(double X, double Y, double side) {
  const double m = std::sqrt(X * X + Y * Y);
  double re, im;
  if (X >= 0.0) {
    re = std::sqrt(0.5 * (m + X));
    im = re > 0.0 ? std::abs(Y) / (2.0 * re) : 0.0;
  } else {
    im = std::sqrt(0.5 * (m - X));
    re = std::abs(Y) / (2.0 * im);
  }
  if (Y < 0.0 || (Y == 0.0 && side < 0.0)) re = -re;
  return {re, im};
}

// phi^{-1}(z) = w + sqrt((z - w)^2 - r2), r2 = 4 dt.
inline cplx inverse_step(cplx z, double w, double r2) {
  const double u = z.real() - w, v = z.imag();
  const cplx s = upper_sqrt(u * u - v * v - r2, 2.0 * u * v, u);
  return {w + s.real(), s.imag()};
}

void check_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string(what) + " must be positive and finite");
}

double wrap_angle(double th) {
  // into (-pi, pi]
  th = std::remainder(th, 2.0 * kPi);
  return th == -kPi ? kPi : th;
}

bool angle_in(double th, double th0, double th1) {
  const double span = th1 - th0;
  double d = th - th0;
  d -= 2.0 * kPi * std::floor(d / (2.0 * kPi));
  return d <= span + 1e-15;
}

void check_direct_cfg(const DirectConfig& c) {
  check_positive(c.dt_first, "dt_first");
  check_positive(c.rel_step, "rel_step");
  check_positive(c.near_frac, "near_frac");
  check_positive(c.accept_radius, "accept_radius");
  check_positive(c.T_max, "T_max");
  if (!(c.hit_eps >= 0.0)) throw DomainError("hit_eps must be >= 0");
  if (!(c.near_frac < 1.0)) throw DomainError("near_frac must be < 1");
  if (c.max_steps < 1) throw DomainError("max_steps must be >= 1");
}

}  // namespace

DrivingPath sample_driving(double T, double dt, std::uint64_t seed, double w0, double kappa) {
  check_positive(T, "T");
  check_positive(dt, "dt");
  check_positive(kappa, "kappa");
  const auto n = static_cast<std::size_t>(std::ceil(T / dt - 1e-9));
  DrivingPath d{dt, {}, kappa, seed};
  d.values.reserve(n + 1);
  d.values.push_back(w0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N;
  const double s = std::sqrt(kappa * dt);
  double w = w0;
  for (std::size_t k = 0; k < n; ++k) {
    w += s * N(rng);
    d.values.push_back(w);
  }
  return d;
}

cplx slit_map_inverse(cplx z, double w, double dt) { return inverse_step(z, w, 4.0 * dt); }

Trace trace_from_driving(const DrivingPath& d, double x0) {
  check_positive(d.dt, "dt");
  Trace tr;
  const std::size_t n = d.values.empty() ? 0 : d.values.size() - 1;
  tr.points.reserve(n + 1);
  tr.capacities.reserve(n + 1);
  tr.points.emplace_back(x0 + (n ? d.values[0] : 0.0), 0.0);
  tr.capacities.push_back(0.0);
  const double r2 = 4.0 * d.dt, h = 2.0 * std::sqrt(d.dt);
  // Step k uses the driving value at its right end.
  for (std::size_t k = 1; k <= n; ++k) {
    cplx z(x0 + d.values[k], h);
    for (std::size_t j = k - 1; j-- > 0;) z = inverse_step(z, x0 + d.values[j + 1], r2);
    if (!(z.imag() >= -1e-9) || !std::isfinite(z.real())) {
      throw NumericalError("trace_from_driving: left the half-plane at step " + std::to_string(k));
    }
    tr.points.push_back(z);
    tr.capacities.push_back(static_cast<double>(k) * d.dt);
  }
  return tr;
}

Disk disk_C(double a) {
  if (!(a < 0.0)) throw DomainError("disk_C: a must be negative");
  const double q = std::exp(a);
  const double den = -std::expm1(2.0 * a);  // 1 - q^2
  return {cplx(0.0, (1.0 + q * q) / den), 2.0 * q / den};
}

double Target::distance(cplx z) const {
  const cplx d = z - center;
  const double r = std::abs(d);
  if (kind == Kind::Disk) return std::max(0.0, r - radius);
  if (angle_in(std::arg(d), th0, th1)) return std::abs(r - radius);
  const cplx e0 = center + std::polar(radius, th0), e1 = center + std::polar(radius, th1);
  return std::min(std::abs(z - e0), std::abs(z - e1));
}

bool Target::segment_hits(cplx p, cplx q) const {
  const cplx d = q - p, f = p - center;
  const double dd = std::norm(d);
  if (kind == Kind::Disk) {
    double s = dd > 0.0 ? -(f.real() * d.real() + f.imag() * d.imag()) / dd : 0.0;
    s = std::clamp(s, 0.0, 1.0);
    return std::abs(f + s * d) <= radius;
  }
  if (distance(p) == 0.0 || distance(q) == 0.0) return true;
  if (dd == 0.0) return false;
  // |f + s d|^2 = R^2
  const double b = f.real() * d.real() + f.imag() * d.imag();
  const double c = std::norm(f) - radius * radius;
  const double disc = b * b - dd * c;
  if (disc < 0.0) return false;
  const double sq = std::sqrt(disc);
  for (double s : {(-b - sq) / dd, (-b + sq) / dd}) {
    if (s >= 0.0 && s <= 1.0 && angle_in(std::arg(f + s * d), th0, th1)) return true;
  }
  return false;
}

double Target::extent_from(cplx from) const {
  if (kind == Kind::Disk) return std::abs(center - from) + radius;
  // the farthest arc point is an endpoint or the antipode of `from`
  double e = std::max(std::abs(center + std::polar(radius, th0) - from),
                      std::abs(center + std::polar(radius, th1) - from));
  const double anti = wrap_angle(std::arg(center - from));
  if (std::abs(center - from) > 0.0 && angle_in(anti, th0, th1)) e = std::abs(center - from) + radius;
  if (std::abs(center - from) == 0.0) e = radius;
  return e;
}

PathOutcome simulate_avoid(const Target& target, double x0, const DirectConfig& cfg, std::uint64_t seed,
                           double kappa) {
  check_direct_cfg(cfg);
  PathOutcome out;
  const cplx start(x0, 0.0);
  const double extent = target.extent_from(start);
  const double accept_r = cfg.accept_radius * extent;
  const double scale = std::max(extent, 1e-300);
  if (target.distance(start) <= cfg.hit_eps * scale) {
    out.hit = true;
    return out;
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N;
  const double sk = std::sqrt(kappa);

  std::vector<double> W, R2;  // accepted steps: driving value and 4 dt
  W.reserve(1024);
  R2.reserve(1024);
  struct Pending {
    double dt, dw;
  };
  std::vector<Pending> pending;
  pending.reserve(64);

  double w = x0, t = 0.0, dt_last = cfg.dt_first;
  cplx tip = start;
  double dist = target.distance(start);

  while (true) {
    if (pending.empty()) {
      const double dt = t == 0.0 ? cfg.dt_first : std::min(cfg.rel_step * t, 2.0 * dt_last);
      pending.push_back({dt, sk * std::sqrt(dt) * N(rng)});
    }
    const Pending st = pending.back();
    const double w_new = w + st.dw;
    const double w_slit =
        cfg.moment_anchor ? w + kTwoThirds * st.dw + sk * std::sqrt(kMomentVar * st.dt) * N(rng) : w_new;
    const double r2 = 4.0 * st.dt;
    cplx z(w_slit, std::sqrt(r2));
    for (std::size_t j = W.size(); j-- > 0;) z = inverse_step(z, W[j], R2[j]);

    const double len = std::abs(z - tip);
    if (len > cfg.near_frac * dist && st.dt > cfg.dt_min) {
      // Brownian-bridge split: the coarse increment is kept, only refined.
      pending.pop_back();
      const double half = 0.5 * st.dt;
      const double dw1 = 0.5 * st.dw + sk * std::sqrt(0.25 * st.dt) * N(rng);
      pending.push_back({half, st.dw - dw1});
      pending.push_back({half, dw1});
      ++out.rejections;
      continue;
    }
    pending.pop_back();
    if (!(z.imag() >= -1e-9) || !std::isfinite(z.real())) {
      throw NumericalError("simulate_avoid: trace left the half-plane at step " + std::to_string(out.steps));
    }
    W.push_back(w_slit);
    R2.push_back(r2);
    w = w_new;
    t += st.dt;
    dt_last = st.dt;
    ++out.steps;

    if (target.segment_hits(tip, z)) {
      out.hit = true;
      return out;
    }
    tip = z;
    dist = target.distance(tip);
    if (dist <= cfg.hit_eps * scale) {
      out.hit = true;
      return out;
    }
    if (pending.empty()) {
      if (std::abs(tip - start) > accept_r) {
        out.accepted_early = true;
        return out;
      }
      if (t >= cfg.T_max || out.steps >= cfg.max_steps) {
        out.truncated = true;
        return out;
      }
    }
  }
}

DirectEstimate estimate_avoid(const Target& target, double x0, long n_paths, const DirectConfig& cfg,
                              std::uint64_t seed, int threads) {
  if (n_paths < 2) throw DomainError("estimate_avoid: need at least 2 paths");
  check_direct_cfg(cfg);
  const int nt = resolve_threads(threads);
  std::vector<PathOutcome> res(static_cast<std::size_t>(n_paths));
  auto run = [&](long i) { res[static_cast<std::size_t>(i)] = simulate_avoid(target, x0, cfg, path_seed(seed, static_cast<std::uint64_t>(i))); };
  if (nt <= 1) {
    for (long i = 0; i < n_paths; ++i) run(i);
  } else {
#pragma omp parallel for schedule(dynamic, 16) num_threads(nt)
    for (long i = 0; i < n_paths; ++i) run(i);
  }
  DirectEstimate e;
  e.n_paths = n_paths;
  e.seed = seed;
  double steps = 0.0;
  for (const auto& r : res) {
    e.n_hit += r.hit;
    e.n_accepted_early += r.accepted_early;
    e.n_truncated += r.truncated;
    steps += static_cast<double>(r.steps);
  }
  const double n = static_cast<double>(n_paths);
  e.mean = 1.0 - static_cast<double>(e.n_hit) / n;
  e.stderr_ = std::sqrt(e.mean * (1.0 - e.mean) / (n - 1.0));
  e.mean_steps = steps / n;
  return e;
}

DirectEstimate estimate_F_direct(double a, double x, long n_paths, const DirectConfig& cfg, std::uint64_t seed,
                                 int threads) {
  if (!(x > 0.0 && x < 2.0 * kPi)) throw DomainError("estimate_F_direct: x must lie in (0, 2pi)");
  const double x0 = std::cos(0.5 * x) / std::sin(0.5 * x);
  return estimate_avoid(Target::disk(disk_C(a)), x0, n_paths, cfg, seed, threads);
}

DirectEstimate estimate_slit_validation(double c, double d, long n_paths, const DirectConfig& cfg,
                                        std::uint64_t seed, int threads) {
  check_positive(c, "c");
  check_positive(d, "d");
  // z -> (z - c)/(z + c) sends c to 0, -c to infinity and i[0, d] onto the unit arc from
  // arg (d^2 - c^2 + 2icd) up to pi.
  const double th0 = std::atan2(2.0 * c * d, d * d - c * c);
  return estimate_avoid(Target::arc(cplx(0.0, 0.0), 1.0, th0, kPi), 0.0, n_paths, cfg, seed, threads);
}

KomatuState komatu_step(const KomatuState& s, double da) {
  if (!(da >= 0.0)) throw DomainError("komatu_step: da must be >= 0");
  if (!(s.a + da < 0.0)) throw DomainError("komatu_step: a + da must stay negative");
  KomatuState out = s;
  out.a = s.a + da;
  if (da == 0.0) return out;
  const AnnulusParam p0(s.a), pm(s.a + 0.5 * da), p1(s.a + da);
  for (auto& z : out.samples) {
    const cplx k1 = special::xi2(z, s.y, p0);
    const cplx k2 = special::xi2(z + 0.5 * da * k1, s.y, pm);
    const cplx k3 = special::xi2(z + 0.5 * da * k2, s.y, pm);
    const cplx k4 = special::xi2(z + da * k3, s.y, p1);
    z += da / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return out;
}

}  // namespace annulus::loewner
