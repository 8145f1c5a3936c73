// SPDX-License-Identifier: Apache-2.0
#include "annulus/xval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include "annulus/conformal.hpp"
#include "annulus/error.hpp"
#include "annulus/stats.hpp"

namespace annulus::xval {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void add_note(std::string& notes, const std::string& s) {
  if (!notes.empty()) notes += "; ";
  notes += s;
}

FitResult finish(std::vector<double> xs, std::vector<double> ys, double target) {
  const auto f = stats::ols(xs, ys);
  FitResult r;
  r.slope = f.slope;
  r.intercept = f.intercept;
  r.r2 = f.r2;
  r.target = target;
  r.rel_error = std::abs(f.slope / target - 1.0);
  r.xs = std::move(xs);
  r.ys = std::move(ys);
  return r;
}

void check_window(std::span<const double> a_values, double lo, double hi, const char* who) {
  if (a_values.size() < 2) throw DomainError(std::string(who) + ": need at least two a values");
  for (double a : a_values) {
    if (!(a >= lo - 1e-12 && a <= hi + 1e-12)) {
      throw DomainError(std::string(who) + ": a = " + std::to_string(a) + " outside [" + std::to_string(lo) + ", " +
                        std::to_string(hi) + "]");
    }
  }
}

// Both slit-avoidance terms of the lower bracket at x = pi (u = -1).
double log_lower_sum_at_pi(double a) {
  const AnnulusParam p(a);
  const auto m = conformal::modulus_L(p);
  const double D = (1.0 + m.L) / m.one_minus_L;
  const double c = std::abs(conformal::boundary_u(a, kPi));
  const double l1 = conformal::log_slit_avoid_prob(c, D);
  const double l2 = conformal::log_slit_avoid_prob(1.0 / c, D);
  const double mx = std::max(l1, l2);
  return mx + std::log1p(std::exp(std::min(l1, l2) - mx));
}

}  // namespace

std::vector<ComparisonRow> compare_methods(std::span<const std::pair<double, double>> points,
                                           const MethodConfig& cfg) {
  std::vector<ComparisonRow> rows;
  rows.reserve(points.size());

  // one march for every level at or below a_start
  std::vector<double> levels;
  for (const auto& [a, x] : points) {
    if (a <= cfg.a_start) levels.push_back(a);
  }
  std::optional<pde::PdeSolution> sol;
  std::string pde_error;
  if (!levels.empty()) {
    std::sort(levels.begin(), levels.end(), std::greater<>());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    pde::GridConfig g = cfg.grid;
    g.required_levels = levels;
    if (g.threads == 0) g.threads = cfg.threads;
    try {
      sol = cfg.richardson ? pde::solve_richardson(cfg.a_start, levels.back(), g)
                           : pde::solve(cfg.a_start, levels.back(), g);
    } catch (const Error& e) {
      pde_error = e.what();
    }
  }

  for (const auto& [a, x] : points) {
    ComparisonRow r;
    r.a = a;
    r.x = x;
    r.f_pde = r.pde_err = r.f_mc = r.mc_stderr = r.f_direct = r.direct_stderr = r.bracket_lo = r.bracket_hi = kNaN;
    try {
      const auto br = conformal::bracket_F(a, x);
      r.bracket_lo = br.lower;
      r.bracket_hi = br.upper;
    } catch (const Error& e) {
      add_note(r.notes, std::string("bracket: ") + e.what());
    }
    if (a > cfg.a_start) {
      add_note(r.notes, "pde: a above the march start");
    } else if (!sol) {
      add_note(r.notes, "pde: " + pde_error);
    } else {
      try {
        r.f_pde = pde::F_lookup(*sol, a, x);
        r.pde_err = pde::F_error_lookup(*sol, a, x);
      } catch (const Error& e) {
        add_note(r.notes, std::string("pde: ") + e.what());
      }
    }
    if (cfg.mc_paths > 0) {
      if (a > cfg.mc_max_a) {
        add_note(r.notes, "mc: out of range (a > " + std::to_string(cfg.mc_max_a) + ")");
      } else {
        try {
          const auto e = mc::estimate_F_feynman_kac(a, x, cfg.mc_paths, cfg.legendre, cfg.mc_seed, cfg.threads);
          r.f_mc = e.mean;
          r.mc_stderr = e.stderr_;
          if (e.n_invalid > 0) add_note(r.notes, "mc: " + std::to_string(e.n_invalid) + " paths hit max_steps");
        } catch (const Error& e) {
          add_note(r.notes, std::string("mc: ") + e.what());
        }
      }
    }
    if (cfg.direct_paths > 0) {
      try {
        const auto e = loewner::estimate_F_direct(a, x, cfg.direct_paths, cfg.direct, cfg.direct_seed, cfg.threads);
        r.f_direct = e.mean;
        r.direct_stderr = e.stderr_;
        if (e.n_truncated * 100 > e.n_paths) add_note(r.notes, "direct: early accept missed by more than 1% of paths");
      } catch (const Error& e) {
        add_note(r.notes, std::string("direct: ") + e.what());
      }
    }
    // Near q = 1 the bracket is tighter than any grid can resolve, so allow the PDE's own error bar.
    r.pde_in_bracket = r.f_pde >= r.bracket_lo - r.pde_err && r.f_pde <= r.bracket_hi + r.pde_err;
    r.mc_agrees = std::abs(r.f_pde - r.f_mc) <= 3.0 * r.mc_stderr;
    r.direct_agrees = std::abs(r.f_direct - r.f_mc) <= 3.0 * std::hypot(r.mc_stderr, r.direct_stderr);
    r.consistent = r.pde_in_bracket && r.mc_agrees;
    rows.push_back(std::move(r));
  }
  return rows;
}

FitResult fit_q1_slope(double x, std::span<const double> a_values, bool lower_only) {
  if (!(x > 0.0 && x <= kPi)) throw DomainError("fit_q1_slope: x must lie in (0, pi]");
  check_window(a_values, -0.2, -0.02, "fit_q1_slope");
  std::vector<double> xs, ys;
  for (double a : a_values) {
    const auto b = conformal::bracket_F(a, x);
    xs.push_back(x / a);
    ys.push_back(lower_only ? b.log_lower : 0.5 * (b.log_lower + b.log_upper));
  }
  return finish(std::move(xs), std::move(ys), 5.0 * kPi / 8.0);
}

FitResult fit_q0_exponent(double x, const pde::PdeSolution& sol, double a_lo, double a_hi, int n) {
  if (!(a_lo < a_hi) || n < 2) throw DomainError("fit_q0_exponent: need a_lo < a_hi and n >= 2");
  std::vector<double> xs, ys;
  for (int k = 0; k < n; ++k) {
    const double a = a_lo + (a_hi - a_lo) * k / (n - 1);
    const double h = pde::H_lookup(sol, a, x);
    if (!(h > 0.0)) throw NumericalError("fit_q0_exponent: H <= 0 at a = " + std::to_string(a));
    xs.push_back(a);
    ys.push_back(std::log(h));
  }
  return finish(std::move(xs), std::move(ys), 2.0 / 3.0);
}

double q0_shape_ratio(const pde::PdeSolution& sol, double a) {
  return pde::H_lookup(sol, a, 0.5 * kPi) / pde::H_lookup(sol, a, kPi);
}

FitResult fit_joint_hit_rate(std::span<const double> a_values) {
  check_window(a_values, -0.3, -0.05, "fit_joint_hit_rate");
  std::vector<double> xs, ys;
  for (double a : a_values) {
    const AnnulusParam p(a);
    const auto m = conformal::modulus_L(p);
    const double J = conformal::joint_hit_prob(conformal::boundary_u(a, kPi), m.L, m.one_minus_L);
    if (!(J > 0.0)) throw NumericalError("fit_joint_hit_rate: joint-hit probability underflowed");
    xs.push_back(kPi * kPi / a);
    ys.push_back(std::log(J));
  }
  return finish(std::move(xs), std::move(ys), 1.0);
}

double joint_prefactor_ratio(double a) {
  const AnnulusParam p(a);
  const auto m = conformal::modulus_L(p);
  const double J = conformal::joint_hit_prob(conformal::boundary_u(a, kPi), m.L, m.one_minus_L);
  return J / (5.0 / 256.0 * std::pow(m.one_minus_L, 4));
}

FitResult fit_lower_sum_rate(std::span<const double> a_values) {
  check_window(a_values, -0.3, -0.02, "fit_lower_sum_rate");
  std::vector<double> xs, ys;
  for (double a : a_values) {
    xs.push_back(kPi / a);
    ys.push_back(log_lower_sum_at_pi(a));
  }
  return finish(std::move(xs), std::move(ys), 5.0 * kPi / 8.0);
}

FitResult werner_check(std::span<const double> a_values) {
  check_window(a_values, -0.2, -0.02, "werner_check");
  std::vector<double> xs, ys;
  for (double a : a_values) {
    const auto b = conformal::bracket_F(a, kPi);
    xs.push_back(kPi * kPi / a);
    ys.push_back(b.log_lower + b.log_upper);  // 2 ln(geometric mean)
  }
  return finish(std::move(xs), std::move(ys), 5.0 / 4.0);
}

}  // namespace annulus::xval
