// SPDX-License-Identifier: Apache-2.0
#include "annulus/mc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "annulus/error.hpp"
#include "annulus/parallel.hpp"
#include "annulus/special_fn.hpp"
#include "annulus/stats.hpp"

namespace annulus::mc {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
const double kSqrt83 = std::sqrt(8.0 / 3.0);

// -2 sum n c_n (1 - cos n y) with 1 - cos n y = 2 sin^2(n y / 2).
double rate_series(double y, double b, int max_terms) {
  const double q2 = std::exp(2.0 * b);
  const double tail = 1.0 / (-std::expm1(2.0 * b));
  const double sh = std::sin(0.5 * y), ch = std::cos(0.5 * y);
  double s = sh, c = ch;
  double qn = 1.0;
  double acc = 0.0;
  for (int n = 1; n <= max_terms; ++n) {
    qn *= q2;
    const double cn = qn / (1.0 - qn);
    acc += n * cn * (s * s);
    if (4.0 * n * cn * tail * q2 < 1e-17) return -4.0 * acc;
    const double s_next = s * ch + c * sh;
    c = c * ch - s * sh;
    s = s_next;
  }
  throw TruncationError("functional_increment: series did not converge at b=" + std::to_string(b));
}

double rate_images(double y, const AnnulusParam& p) {
  const auto d = special::log_theta_derivs(y, p);
  const double sh = std::sin(0.5 * y);
  return d.d2 + special::eta_over_pi(p) + 0.25 / (sh * sh) - 1.0 / 12.0;
}

double rate(double y, double b, int max_terms) {
  if (std::exp(b) <= special::kSeriesMaxQ) return rate_series(y, b, max_terms);
  return rate_images(y, AnnulusParam(b));
}

void check_cfg(const LegendreConfig& cfg) {
  if (!(cfg.db_base > 0.0) || !(cfg.eps_abs > 0.0 && cfg.eps_abs < 0.1) ||
      !(cfg.kill_delta > 0.0 && cfg.kill_delta <= 0.05) || !(cfg.step_frac > 0.0) || cfg.max_steps < 1) {
    throw DomainError("LegendreConfig out of range (need db_base>0, eps_abs in (0,0.1), kill_delta in (0,0.05])");
  }
}

}  // namespace

double legendre_step(double y, double /*b*/, double db, double gaussian) {
  const double cot = std::cos(0.5 * y) / std::sin(0.5 * y);
  const double next = y - kSqrt83 * gaussian * std::sqrt(db) - (2.0 / 3.0) * cot * db;
  return std::clamp(next, 0.0, kTwoPi);
}

bool drift_flow(double& y, double h) {
  const double v = std::cos(0.5 * y) * std::exp(h / 3.0);
  if (v >= 1.0) {
    y = 0.0;
    return false;
  }
  if (v <= -1.0) {
    y = kTwoPi;
    return false;
  }
  y = 2.0 * std::acos(v);
  return true;
}

double split_step(double y, double db, double gaussian) {
  if (!drift_flow(y, 0.5 * db)) return y;
  y -= kSqrt83 * gaussian * std::sqrt(db);
  if (y <= 0.0 || y >= kTwoPi) return std::clamp(y, 0.0, kTwoPi);
  drift_flow(y, 0.5 * db);
  return y;
}

double functional_increment(double y, const AnnulusParam& pb) {
  if (y <= 0.0 || y >= kTwoPi) return 0.0;
  if (pb.q() <= special::kSeriesMaxQ) return rate_series(y, pb.a(), pb.trunc().max_terms);
  return rate_images(y, pb);
}

double functional_increment_reference(double y, const AnnulusParam& pb) {
  const double wp = special::weier_p(special::cplx(y, 0.0), pb).real();
  const double sh = std::sin(0.5 * y);
  return -(wp - 0.25 / (sh * sh)) - 1.0 / 12.0;
}

double prefactor(double x, const AnnulusParam& P) {
  if (!(x >= 0.0 && x <= kTwoPi)) throw DomainError("prefactor: x outside [0, 2pi]");
  return std::exp(-0.75 * special::log_theta_ratio(x, P));
}

PathResult simulate_path(double a0, double x, const LegendreConfig& cfg, std::uint64_t seed, bool mirror,
                         const std::vector<double>* checkpoints, std::vector<CheckpointState>* states) {
  if (!(a0 < 0.0)) throw DomainError("simulate_path: a0 must be negative");
  if (!(x >= 0.0 && x <= kTwoPi)) throw DomainError("simulate_path: x outside [0, 2pi]");
  check_cfg(cfg);
  const double b_kill = -cfg.kill_delta;
  const int max_terms = AnnulusParam(a0).trunc().max_terms;

  // Integrate the reflected coordinate when x > pi, so that a path and its
  // mirror image run through identical arithmetic.
  const bool flip = x > kPi;
  double z = flip ? kTwoPi - x : x;
  const double sign = (flip != mirror) ? -1.0 : 1.0;

  std::size_t next_cp = 0;
  if (states != nullptr) states->clear();
  auto record_until = [&](double b_now, bool absorbed, double log_w) {
    if (checkpoints == nullptr) return;
    while (next_cp < checkpoints->size() && (*checkpoints)[next_cp] <= b_now) {
      const double yv = flip ? kTwoPi - z : z;
      states->push_back({absorbed, yv, log_w});
      ++next_cp;
    }
  };
  auto record_rest = [&](double log_w) {
    if (checkpoints == nullptr) return;
    while (next_cp < checkpoints->size()) {
      states->push_back({true, 0.0, log_w});
      ++next_cp;
    }
  };

  std::mt19937_64 eng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  PathResult r;
  double b = a0;
  double log_w = 0.0;
  record_until(b, false, 0.0);
  while (true) {
    const double dist = std::min(z, kTwoPi - z);
    if (dist <= cfg.eps_abs) {
      r.absorbed = true;
      break;
    }
    if (b >= b_kill) break;
    if (r.steps >= cfg.max_steps) {
      r.invalid = true;
      break;
    }
    double db = std::min(cfg.db_base, cfg.step_frac * 0.375 * dist * dist);
    double b_new = b + db;
    if (b_new >= b_kill) {
      b_new = b_kill;
      db = b_kill - b;
    }
    if (checkpoints != nullptr && next_cp < checkpoints->size() && b_new >= (*checkpoints)[next_cp]) {
      b_new = (*checkpoints)[next_cp];
      db = b_new - b;
    }

    const double extra = cfg.shifted_integrand ? 1.0 / 12.0 : 0.0;
    if (cfg.scheme == Scheme::Euler) {
      log_w += (rate(z, b + 0.5 * db, max_terms) + extra) * db;
      z = legendre_step(z, b, db, sign * normal(eng));
    } else {
      const double v0 = rate(z, b, max_terms);
      z = split_step(z, db, sign * normal(eng));
      const double v1 = (z <= 0.0 || z >= kTwoPi) ? 0.0 : rate(z, b_new, max_terms);
      log_w += (0.5 * (v0 + v1) + extra) * db;
    }
    b = b_new;
    ++r.steps;
    const bool absorbed_now = std::min(z, kTwoPi - z) <= cfg.eps_abs;
    record_until(b, absorbed_now, log_w);
  }
  r.b_end = b;
  if (r.absorbed) {
    r.weight = std::exp(log_w);
    record_rest(log_w);
  } else {
    record_rest(log_w);  // killed or invalid paths never reach later checkpoints
  }
  return r;
}

McEstimate estimate_F_feynman_kac(double a, double x, long n_paths, const LegendreConfig& cfg, std::uint64_t seed,
                                  int threads, bool mirror) {
  if (n_paths < 2) throw DomainError("estimate_F_feynman_kac: need at least 2 paths");
  const double pref = prefactor(x, AnnulusParam(a));
  std::vector<PathResult> res(static_cast<std::size_t>(n_paths));
  const int nt = resolve_threads(threads);
  auto body = [&](long i) { res[i] = simulate_path(a, x, cfg, path_seed(seed, static_cast<std::uint64_t>(i)), mirror); };
  if (nt <= 1) {
    for (long i = 0; i < n_paths; ++i) body(i);
  } else {
#pragma omp parallel for schedule(dynamic, 64) num_threads(nt)
    for (long i = 0; i < n_paths; ++i) body(i);
  }

  McEstimate est;
  est.seed = seed;
  est.n_paths = n_paths;
  std::vector<double> w;
  w.reserve(res.size());
  for (const auto& r : res) {
    if (r.invalid) {
      ++est.n_invalid;
      continue;
    }
    if (r.absorbed) {
      ++est.n_absorbed;
    } else {
      ++est.n_killed;
    }
    w.push_back(r.weight);
  }
  const auto me = stats::mean_stderr(w);
  est.mean = pref * me.mean;
  est.stderr_ = pref * me.stderr_;
  return est;
}

MartingaleReport martingale_check(double a0, double x, const std::vector<double>& checkpoints,
                                  const pde::PdeSolution& sol, long n_paths, const LegendreConfig& cfg,
                                  std::uint64_t seed, int threads) {
  if (n_paths < 2) throw DomainError("martingale_check: need at least 2 paths");
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    const double c = checkpoints[i];
    if (!(c > a0 && c < -cfg.kill_delta)) throw DomainError("martingale_check: checkpoints must lie in (a0, -kill_delta)");
    if (i > 0 && !(c > checkpoints[i - 1])) throw DomainError("martingale_check: checkpoints must increase");
  }
  const double pref = prefactor(x, AnnulusParam(a0));
  const std::size_t nc = checkpoints.size();
  std::vector<double> m(static_cast<std::size_t>(n_paths) * nc, 0.0);
  std::vector<AnnulusParam> pc;
  for (double c : checkpoints) pc.emplace_back(c);

  auto body = [&](long i) {
    std::vector<CheckpointState> st;
    simulate_path(a0, x, cfg, path_seed(seed, static_cast<std::uint64_t>(i)), false, &checkpoints, &st);
    for (std::size_t k = 0; k < nc; ++k) {
      const auto& s = st[k];
      double val = 0.0;
      if (s.absorbed) {
        val = std::exp(s.log_w) * pref;
      } else {
        const double f = pde::F_lookup(sol, checkpoints[k], s.y);
        val = f * std::exp(s.log_w + 0.75 * special::log_theta_ratio(s.y, pc[k])) * pref;
      }
      m[static_cast<std::size_t>(i) * nc + k] = val;
    }
  };
  const int nt = resolve_threads(threads);
  if (nt <= 1) {
    for (long i = 0; i < n_paths; ++i) body(i);
  } else {
#pragma omp parallel for schedule(dynamic, 64) num_threads(nt)
    for (long i = 0; i < n_paths; ++i) body(i);
  }

  MartingaleReport rep;
  rep.f0 = pde::F_lookup(sol, a0, x);
  rep.n_paths = n_paths;
  rep.seed = seed;
  std::vector<double> col(static_cast<std::size_t>(n_paths));
  for (std::size_t k = 0; k < nc; ++k) {
    for (long i = 0; i < n_paths; ++i) col[i] = m[static_cast<std::size_t>(i) * nc + k];
    const auto me = stats::mean_stderr(col);
    rep.rows.push_back({checkpoints[k], me.mean, me.stderr_, me.stderr_ > 0 ? (me.mean - rep.f0) / me.stderr_ : 0.0});
  }
  return rep;
}

}  // namespace annulus::mc
