// SPDX-License-Identifier: Apache-2.0
#include "annulus/pde.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>

#include "annulus/conformal.hpp"
#include "annulus/error.hpp"
#include "annulus/parallel.hpp"
#include "annulus/special_fn.hpp"

namespace annulus::pde {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kDiff = 4.0 / 3.0;

void check_x(double x) {
  if (!(x > 0.0 && x < kTwoPi)) throw DomainError("pde coefficients need x in (0, 2pi), got " + std::to_string(x));
}

// c_n = q^{2n}/(1-q^{2n}) for n = 1..N, N chosen so that the tail of
// sum 4 n c_n is below the truncation tolerance.
std::vector<double> fourier_weights(const AnnulusParam& p) {
  std::vector<double> c;
  const double a = p.a();
  const double q2 = std::exp(2.0 * a);
  const double tol = p.trunc().rel_tol * 1e-2;
  const double ratio_tail = 1.0 / (-std::expm1(2.0 * a));
  for (int n = 1;; ++n) {
    if (n > p.trunc().max_terms) {
      throw TruncationError("pde Fourier weights did not converge at q=" + std::to_string(p.q()));
    }
    const double qn = std::exp(2.0 * n * a);
    const double cn = qn / (-std::expm1(2.0 * n * a));
    c.push_back(cn);
    if (n >= 2 && 4.0 * n * cn * ratio_tail * q2 < tol) break;
  }
  return c;
}

// b and c from the q-sums with precomputed weights.
void series_kernel(double x, const std::vector<double>& w, double& b, double& c) {
  const double sx = std::sin(x), cx = std::cos(x);
  const double cot = std::cos(0.5 * x) / std::sin(0.5 * x);
  double sn = sx, cn = cx;  // sin(n x), cos(n x) at n = 1
  double sb = 0.0, sc = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const int n = static_cast<int>(k) + 1;
    sb += w[k] * sn;
    if (n >= 2) sc += w[k] * (n * (1.0 + cn) - cot * sn);
    const double s_next = sn * cx + cn * sx;
    cn = cn * cx - sn * sx;
    sn = s_next;
  }
  b = -(2.0 / 3.0) * cot + 4.0 * sb;
  c = 2.5 * sc;
}

// Near q = 1 the sums are long; use ln theta derivatives from the image form.
void image_kernel(double x, const AnnulusParam& p, double eta_pi, double& b, double& c) {
  const auto d = special::log_theta_derivs(x, p);
  const double s = std::sin(0.5 * x);
  const double cot = std::cos(0.5 * x) / s;
  const double csc2 = 1.0 / (s * s);
  b = 2.0 * d.d1 - (5.0 / 3.0) * cot;
  c = (15.0 / 16.0) * csc2 - 1.25 * (cot * d.d1 - d.d2 + eta_pi + 5.0 / 12.0);
}

}  // namespace

Coefficients pde_coefficients(double x, const AnnulusParam& p) {
  check_x(x);
  double b = 0.0, c = 0.0;
  if (p.q() <= special::kSeriesMaxQ) {
    series_kernel(x, fourier_weights(p), b, c);
  } else {
    image_kernel(x, p, special::eta_over_pi(p), b, c);
  }
  return {kDiff, b, c};
}

Coefficients pde_coefficients_reference(double x, const AnnulusParam& p) {
  check_x(x);
  const special::cplx z(x, 0.0);
  const double zeta = special::weier_zeta(z, p).real();
  const double wp = special::weier_p(z, p).real();
  const double ep = special::eta_over_pi(p);
  const double s = std::sin(0.5 * x);
  const double cot = std::cos(0.5 * x) / s;
  const double lam = zeta - ep * x;
  const double b = 2.0 * lam - (5.0 / 3.0) * cot;
  const double c = (15.0 / 16.0) / (s * s) - 1.25 * (cot * lam + wp + 2.0 * ep + 5.0 / 12.0);
  return {kDiff, b, c};
}

void assemble_coefficients(std::span<const double> x, const AnnulusParam& p, std::span<double> drift,
                           std::span<double> potential, int threads) {
  if (drift.size() != x.size() || potential.size() != x.size()) {
    throw DomainError("assemble_coefficients: output spans must match the node count");
  }
  for (double xi : x) check_x(xi);
  const bool series = p.q() <= special::kSeriesMaxQ;
  const std::vector<double> w = series ? fourier_weights(p) : std::vector<double>{};
  const double eta_pi = series ? 0.0 : special::eta_over_pi(p);
  const auto n = static_cast<long>(x.size());
  auto body = [&](long j) {
    if (series) {
      series_kernel(x[j], w, drift[j], potential[j]);
    } else {
      image_kernel(x[j], p, eta_pi, drift[j], potential[j]);
    }
  };
  if (threads <= 1) {
    for (long j = 0; j < n; ++j) body(j);
    return;
  }
#pragma omp parallel for schedule(static) num_threads(threads)
  for (long j = 0; j < n; ++j) body(j);
}

double initial_condition(double a_start, double x) {
  if (!(a_start >= -0.1 && a_start <= -0.005)) {
    throw DomainError("initial_condition needs a_start in [-0.1, -0.005], got " + std::to_string(a_start));
  }
  if (!(x >= 0.0 && x <= kTwoPi)) throw DomainError("initial_condition needs x in [0, 2pi]");
  const double m = std::min(x, kTwoPi - x);
  return -std::expm1(5.0 * kPi * m / (8.0 * a_start));
}

namespace {

// Thomas algorithm; lo[0] and up[n-1] are ignored. Overwrites rhs with the solution.
void tridiag_solve(const std::vector<double>& lo, std::vector<double>& di, const std::vector<double>& up,
                   std::vector<double>& rhs) {
  const std::size_t n = di.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double m = lo[i] / di[i - 1];
    di[i] -= m * up[i - 1];
    rhs[i] -= m * rhs[i - 1];
  }
  rhs[n - 1] /= di[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - up[i] * rhs[i + 1]) / di[i];
}

}  // namespace

PdeSolution solve(double a_start, double a_end, const GridConfig& cfg) {
  if (!(a_start < 0.0) || !std::isfinite(a_start)) throw DomainError("solve: a_start must be negative");
  if (!(a_end < a_start) || !std::isfinite(a_end)) throw DomainError("solve: need a_end < a_start");
  if (cfg.nx < 8 || cfg.nx % 2 != 0) throw DomainError("solve: nx must be even and >= 8");
  if (!(cfg.dtau0 > 0.0 && cfg.dtau_max >= cfg.dtau0 && cfg.dtau_growth >= 1.0)) {
    throw DomainError("solve: need 0 < dtau0 <= dtau_max and growth >= 1");
  }
  if (cfg.substeps < 1) throw DomainError("solve: substeps must be >= 1");
  if (cfg.init == InitKind::Custom && !cfg.custom_init) throw DomainError("solve: custom init not supplied");

  const int threads = resolve_threads(cfg.threads);
  const int nx = cfg.nx;
  const double h = kTwoPi / nx;
  PdeSolution sol;
  sol.nx = nx;
  sol.dtau0 = cfg.dtau0;
  sol.dtau_growth = cfg.dtau_growth;
  sol.dtau_max = cfg.dtau_max;
  sol.substeps = cfg.substeps;
  sol.frozen_q0 = cfg.frozen_q0;
  sol.x.resize(nx + 1);
  for (int j = 0; j <= nx; ++j) sol.x[j] = h * j;
  sol.x[nx] = kTwoPi;

  // The marched unknown is F itself. H = 1 - F is algebraically the same
  // system but cannot represent F below ~1e-16, and the large positive
  // potential near q = 1 amplifies that rounding without bound.
  std::vector<double> F(nx + 1, 1.0);
  switch (cfg.init) {
    case InitKind::Bracket: {
      sol.init = "bracket";
      for (int j = 1; j < nx; ++j) {
        const auto br = conformal::bracket_F(a_start, sol.x[j]);
        F[j] = std::exp(0.5 * (br.log_lower + br.log_upper));
      }
      break;
    }
    case InitKind::Asymptotic:
      sol.init = "asymptotic";
      for (int j = 1; j < nx; ++j) F[j] = 1.0 - initial_condition(a_start, sol.x[j]);
      break;
    case InitKind::Custom:
      sol.init = "custom";
      for (int j = 1; j < nx; ++j) F[j] = 1.0 - cfg.custom_init(sol.x[j]);
      break;
  }
  for (int j = 1; j < nx / 2; ++j) F[nx - j] = F[j];

  sol.a.push_back(a_start);
  sol.F.insert(sol.F.end(), F.begin(), F.end());

  const std::size_t m = nx - 1;  // interior unknowns
  std::span<const double> xin(sol.x.data() + 1, m);
  std::vector<double> b(m), c(m), lo(m), di(m), up(m), rhs(m);
  std::vector<double> frozen_b;
  if (cfg.frozen_q0) {
    frozen_b.resize(m);
    for (std::size_t i = 0; i < m; ++i) frozen_b[i] = -(2.0 / 3.0) * std::cos(0.5 * xin[i]) / std::sin(0.5 * xin[i]);
  }

  std::vector<double> required;
  for (double r : cfg.required_levels) {
    if (r < a_start && r > a_end) required.push_back(r);
  }
  std::sort(required.begin(), required.end(), std::greater<>());
  std::size_t next_req = 0;

  double a = a_start;
  double dtau = cfg.dtau0;
  int step = 0;
  while (a > a_end) {
    // The profile near x = 0 varies on the scale x ~ |a|, i.e. on tau-scale a^2.
    if (cfg.dtau_rel_a2 > 0.0) dtau = std::min(dtau, std::max(cfg.dtau0, cfg.dtau_rel_a2 * a * a));
    double a_next = a - std::min(dtau, a - a_end);
    if (a_next <= a_end + 1e-14 * std::abs(a_end)) a_next = a_end;
    // Land exactly on requested levels; avoid leaving a sliver step behind.
    while (next_req < required.size() && required[next_req] >= a - 1e-14) ++next_req;
    if (next_req < required.size()) {
      const double r = required[next_req];
      if (a_next <= r + 0.25 * (a - a_next)) a_next = r;
    }
    const double macro = a - a_next;
    for (int sub = 0; sub < cfg.substeps; ++sub) {
      const double a0 = a - macro * sub / cfg.substeps;
      const double a1 = sub + 1 == cfg.substeps ? a_next : a - macro * (sub + 1) / cfg.substeps;
      const double dtt = a0 - a1;
      if (cfg.frozen_q0) {
        std::copy(frozen_b.begin(), frozen_b.end(), b.begin());
        std::fill(c.begin(), c.end(), 0.0);
      } else {
        assemble_coefficients(xin, AnnulusParam(a0 - 0.5 * dtt), b, c, threads);
      }
      const bool implicit = step * cfg.substeps + sub < cfg.rannacher_steps * cfg.substeps;
      const double k_impl = implicit ? dtt : 0.5 * dtt;
      const double k_expl = dtt - k_impl;
      for (std::size_t i = 0; i < m; ++i) {
        const double al = kDiff / (h * h) - b[i] / (2.0 * h);
        const double be = -2.0 * kDiff / (h * h) + c[i];
        const double ga = kDiff / (h * h) + b[i] / (2.0 * h);
        const double fl = F[i], fc = F[i + 1], fr = F[i + 2];
        lo[i] = -k_impl * al;
        di[i] = 1.0 - k_impl * be;
        up[i] = -k_impl * ga;
        rhs[i] = fc + k_expl * (al * fl + be * fc + ga * fr);
      }
      // Dirichlet F = 1 at both ends, new level.
      rhs[0] += k_impl * (kDiff / (h * h) - b[0] / (2.0 * h));
      rhs[m - 1] += k_impl * (kDiff / (h * h) + b[m - 1] / (2.0 * h));
      tridiag_solve(lo, di, up, rhs);
      for (std::size_t i = 0; i < m; ++i) F[i + 1] = rhs[i];
    }

    for (int j = 1; j < nx; ++j) {
      if (!(F[j] >= -cfg.range_eps && F[j] <= 1.0 + cfg.range_eps)) {
        throw NumericalError("pde step rejected at level a=" + std::to_string(a_next) + " (step " +
                             std::to_string(step) + "): F=" + std::to_string(F[j]) + " at x=" +
                             std::to_string(sol.x[j]));
      }
    }
    for (int j = 1; j < nx / 2; ++j) {
      sol.max_asymmetry = std::max(sol.max_asymmetry, std::abs(F[j] - F[nx - j]));
    }
    a = a_next;
    sol.a.push_back(a);
    sol.F.insert(sol.F.end(), F.begin(), F.end());
    ++step;
    dtau = std::min(dtau * cfg.dtau_growth, cfg.dtau_max);
  }
  return sol;
}

PdeSolution solve_richardson(double a_start, double a_end, const GridConfig& cfg) {
  PdeSolution coarse = solve(a_start, a_end, cfg);
  GridConfig fine_cfg = cfg;
  fine_cfg.nx = 2 * cfg.nx;
  fine_cfg.substeps = 2 * cfg.substeps;
  const PdeSolution fine = solve(a_start, a_end, fine_cfg);
  if (fine.a.size() != coarse.a.size()) throw NumericalError("solve_richardson: level mismatch");
  const std::size_t nc = coarse.x.size(), nf = fine.x.size();
  double corr = 0.0;
  coarse.F_err.assign(coarse.F.size(), 0.0);
  for (std::size_t k = 1; k < coarse.a.size(); ++k) {
    for (std::size_t j = 1; j + 1 < nc; ++j) {
      const double fc = coarse.F[k * nc + j];
      const double ff = fine.F[k * nf + 2 * j];
      const double ex = ff + (ff - fc) / 3.0;
      corr = std::max(corr, std::abs(ex - fc));
      coarse.F_err[k * nc + j] = std::abs(ex - fc);
      coarse.F[k * nc + j] = ex;
    }
  }
  coarse.richardson = true;
  coarse.richardson_correction = corr;
  coarse.max_asymmetry = std::max(coarse.max_asymmetry, fine.max_asymmetry);
  return coarse;
}

namespace {

// Four-point Lagrange weights on nodes t[0..3] at t. Reproduces cubics exactly.
void lagrange4(const double* t, double v, double* w) {
  for (int i = 0; i < 4; ++i) {
    double num = 1.0, den = 1.0;
    for (int k = 0; k < 4; ++k) {
      if (k == i) continue;
      num *= v - t[k];
      den *= t[i] - t[k];
    }
    w[i] = num / den;
  }
}

// First index of a 4-point stencil around interval [i, i+1] within [0, n).
std::size_t stencil_start(std::size_t i, std::size_t n) {
  if (n < 4) return 0;
  const std::size_t s = i == 0 ? 0 : i - 1;
  return std::min(s, n - 4);
}

// 4 x 4 Lagrange interpolation of a (level, node) field.
double interp(const PdeSolution& sol, const std::vector<double>& field, double a, double x) {
  if (sol.a.empty()) throw DomainError("F_lookup: empty solution");
  const double a_hi = sol.a.front(), a_lo = sol.a.back();
  if (!(a <= a_hi && a >= a_lo)) {
    throw DomainError("F_lookup: a=" + std::to_string(a) + " outside solved range [" + std::to_string(a_lo) +
                      ", " + std::to_string(a_hi) + "]");
  }
  if (!(x >= 0.0 && x <= kTwoPi)) throw DomainError("F_lookup: x outside [0, 2pi]");
  const std::size_t na = sol.a.size(), nn = sol.x.size();
  // Levels decrease; k1 = first level <= a.
  auto it = std::lower_bound(sol.a.begin(), sol.a.end(), a, [](double lv, double v) { return lv > v; });
  auto k1 = static_cast<std::size_t>(it - sol.a.begin());
  const std::size_t k0 = k1 == 0 ? 0 : k1 - 1;
  const double h = kTwoPi / sol.nx;
  const auto j0 = static_cast<std::size_t>(std::min<double>(std::floor(x / h), sol.nx - 1));

  const std::size_t ja = stencil_start(j0, nn);
  double wx[4];
  lagrange4(&sol.x[ja], x, wx);
  auto row = [&](std::size_t k) {
    double v = 0.0;
    for (int i = 0; i < 4; ++i) v += wx[i] * field[k * nn + ja + i];
    return v;
  };
  if (k1 < na && sol.a[k1] == a) return row(k1);
  if (na < 4) {
    const std::size_t kk = std::min(k1, na - 1);
    const double ta = kk == k0 ? 0.0 : (sol.a[k0] - a) / (sol.a[k0] - sol.a[kk]);
    return (1.0 - ta) * row(k0) + ta * row(kk);
  }
  const std::size_t ka = stencil_start(k0, na);
  double wa[4];
  lagrange4(&sol.a[ka], a, wa);
  double v = 0.0;
  for (int i = 0; i < 4; ++i) v += wa[i] * row(ka + i);
  return v;
}

}  // namespace

double F_lookup(const PdeSolution& sol, double a, double x) {
  // Interpolation and the march may overshoot [0, 1] by rounding; F is a probability.
  return std::clamp(interp(sol, sol.F, a, x), 0.0, 1.0);
}

double H_lookup(const PdeSolution& sol, double a, double x) { return 1.0 - F_lookup(sol, a, x); }

double F_error_lookup(const PdeSolution& sol, double a, double x) {
  if (sol.F_err.empty()) return 0.0;
  return std::abs(interp(sol, sol.F_err, a, x));
}

double galerkin_first_mode(double a, double x) {
  const AnnulusParam p(a);
  if (!(x >= 0.0 && x <= kTwoPi)) throw DomainError("galerkin_first_mode: x outside [0, 2pi]");
  double lg = (2.0 / 3.0) * a + 0.5 * std::log(-std::expm1(2.0 * a)) - 0.5 * std::log(kPi);
  constexpr int kCap = 2'000'000;
  for (int n = 2;; ++n) {
    if (n > kCap) throw TruncationError("galerkin_first_mode: product did not converge");
    const double t = std::log(-std::expm1(2.0 * n * a));
    lg += 1.25 * t;
    if (-t < 1e-17) break;
  }
  return std::exp(lg) * std::sin(0.5 * x);
}

}  // namespace annulus::pde
