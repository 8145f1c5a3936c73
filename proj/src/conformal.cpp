// SPDX-License-Identifier: Apache-2.0
#include "annulus/conformal.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numbers>
#include <string>

#include "annulus/error.hpp"

namespace annulus::conformal {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// log(1 + w) and exp(w) - 1 for complex w, accurate for small |w|.
cplx clog1p(cplx w) {
  const double re = 0.5 * std::log1p(2.0 * w.real() + std::norm(w));
  return {re, std::atan2(w.imag(), 1.0 + w.real())};
}

cplx cexpm1(cplx w) {
  const double sh = std::sin(0.5 * w.imag());
  return {std::expm1(w.real()) * std::cos(w.imag()) - 2.0 * sh * sh,
          std::exp(w.real()) * std::sin(w.imag())};
}

// Sum 2 sum_{n>=n0} sign^n exp(log_nome * e(n)) * trig(n); tiny helper for theta constants.
double theta3_const(double log_nome) {
  double sum = 1.0;
  for (int n = 1; n < 64; ++n) {
    const double t = std::exp(log_nome * n * n);
    sum += 2.0 * t;
    if (t < 1e-18 * sum) break;
  }
  return sum;
}

// f at z = e^{i theta}, theta in [0, pi), direct nome h = q^4.
BoundaryImage map_direct(double theta, const AnnulusParam& p) {
  const double s = -p.a();
  const double log_h = 4.0 * p.a();
  const cplx v(0.5 - theta / kPi, s / kPi);
  cplx th1 = 0.0;
  cplx th0 = 1.0;
  for (int n = 0; n < 64; ++n) {
    const double e1 = std::exp(log_h * (n + 0.5) * (n + 0.5));
    const double sgn = (n % 2 == 0) ? 1.0 : -1.0;
    th1 += 2.0 * sgn * e1 * std::sin((2.0 * n + 1.0) * kPi * v);
    if (n >= 1) th0 += 2.0 * sgn * std::exp(log_h * n * n) * std::cos(2.0 * n * kPi * v);
    // |sin|, |cos| grow like exp((2n+1) s); the Gaussian in n wins quickly.
    if (e1 * std::exp((2.0 * n + 3.0) * s) < 1e-18 * std::abs(th1) && n >= 1) break;
  }
  const cplx w = th1 / th0;
  return {w, (th0 - th1) / th0};
}

// f at z = e^{i theta}, theta in [0, pi), modular nome h' = exp(pi^2/(4a)).
BoundaryImage map_modular(double theta, const AnnulusParam& p) {
  const double s = -p.a();
  const double rho = kPi * (0.5 * kPi - theta) / (2.0 * s);
  const double step = kPi * kPi / (2.0 * s);  // -log h'^2
  const cplx i(0.0, 1.0);
  // E = i e^{rho}; products over (1 -+ h'^{2n} E)(1 -+ h'^{2n}/E).
  cplx log_p = 0.0;
  for (int n = 1; n < 64; ++n) {
    const cplx t1 = i * std::exp(-step * n + rho);
    const cplx t2 = -i * std::exp(-step * n - rho);
    log_p += clog1p(-t1) + clog1p(-t2) - clog1p(t1) - clog1p(t2);
    if (std::abs(t1) + std::abs(t2) < 1e-18) break;
  }
  const cplx pprod = std::exp(log_p);
  if (rho >= 0.0) {
    const cplx eps = -i * std::exp(-rho);  // 1/E
    const cplx w = pprod * (1.0 - eps) / (1.0 + eps);
    const cplx one_minus_p = -cexpm1(log_p);
    return {w, (one_minus_p + eps * (1.0 + pprod)) / (1.0 + eps)};
  }
  const cplx e = i * std::exp(rho);
  const cplx w = pprod * (e - 1.0) / (e + 1.0);
  return {w, 1.0 - w};
}

BoundaryImage map_at_angle(double theta, const AnnulusParam& p) {
  const bool neg = theta < 0.0;
  const double t = std::abs(theta);
  BoundaryImage r = p.q() <= kDirectMaxQ ? map_direct(t, p) : map_modular(t, p);
  if (neg) {
    r.w = std::conj(r.w);
    r.one_minus_w = std::conj(r.one_minus_w);
  }
  return r;
}

void check_x(double x, const char* who) {
  if (!(x > 0.0 && x < kTwoPi)) {
    throw DomainError(std::string(who) + ": x must lie in (0, 2pi), got " + std::to_string(x));
  }
}

double fold(double x) { return x > kPi ? kTwoPi - x : x; }

cplx deriv_at(double x, const AnnulusParam& p, const SlitDiskModulus& m) {
  const double theta = 0.5 * x;
  const BoundaryImage bi = map_at_angle(theta, p);
  const cplx z = std::polar(1.0, theta);
  const cplx f = bi.w;
  const cplx om = bi.one_minus_w;
  const cplx one_minus_f2 = om * (2.0 - om);
  const double oml = m.one_minus_L;
  const double one_minus_L2 = oml * (2.0 - oml);
  const cplx prod = (one_minus_f2 - one_minus_L2) * (one_minus_f2 + f * f * one_minus_L2);
  cplx d = cplx(0.0, 2.0 * m.K / kPi) / z * std::sqrt(prod);
  // Orientation: f maps the arc near 1 counterclockwise onto the unit circle.
  if ((d * z / f).real() < 0.0) d = -d;
  return d;
}

// sin(phi) for phi = arg w, from |1 - w| = 2 sin(phi/2).
double sin_phi(const BoundaryImage& bi) {
  const double c = std::abs(bi.one_minus_w);
  return c * std::sqrt(std::max(0.0, 1.0 - 0.25 * c * c));
}

double u_from(const BoundaryImage& bi) {
  const cplx om = bi.one_minus_w;
  const cplx u = cplx(0.0, 1.0) * (2.0 - om) / om;
  if (std::abs(u.imag()) > 1e-9 * std::max(1.0, std::abs(u))) {
    throw NumericalError("boundary_u: imaginary residue " + std::to_string(u.imag()) +
                         " exceeds tolerance");
  }
  return u.real();
}

double log_change_factor(double x, const AnnulusParam& p, const SlitDiskModulus& m) {
  const BoundaryImage bi = map_at_angle(0.5 * x, p);
  const double fp = std::abs(deriv_at(x, p, m));
  return 1.25 * std::log(fp * std::sin(0.5 * x) / sin_phi(bi));
}

// G(t) = (1+t)^{-5/4}
double G(double t) { return std::exp(-1.25 * std::log1p(t)); }

}  // namespace

SlitDiskModulus modulus_L(const AnnulusParam& p) {
  const double s = -p.a();
  if (p.q() <= kDirectMaxQ) {
    const double log_h = 4.0 * p.a();
    double th2 = 0.0;
    for (int n = 0; n < 64; ++n) {
      const double t = std::exp(log_h * (n + 0.5) * (n + 0.5));
      th2 += 2.0 * t;
      if (t < 1e-18 * th2) break;
    }
    const double th3 = theta3_const(log_h);
    return {th2 / th3, (th3 - th2) / th3, 0.5 * kPi * th3 * th3, p};
  }
  const double log_hp = kPi * kPi / (4.0 * p.a());
  double odd = 0.0;
  double even = 0.0;
  for (int n = 1; n < 64; ++n) {
    const double t = std::exp(log_hp * n * n);
    (n % 2 == 1 ? odd : even) += t;
    if (t < 1e-300 || t < 1e-18 * odd) break;
  }
  const double th3 = 1.0 + 2.0 * (odd + even);
  const double th0 = 1.0 + 2.0 * (even - odd);
  const double K = 0.5 * kPi * (kPi / (4.0 * s)) * th3 * th3;
  return {th0 / th3, 4.0 * odd / th3, K, p};
}

BoundaryImage map_f_boundary(double x, const AnnulusParam& p) {
  check_x(x, "map_f");
  return map_at_angle(0.5 * x, p);
}

cplx map_f(double x, const AnnulusParam& p) { return map_f_boundary(x, p).w; }

cplx map_f_deriv(double x, const AnnulusParam& p) {
  check_x(x, "map_f_deriv");
  return deriv_at(x, p, modulus_L(p));
}

double log_slit_avoid_prob(double c, double d) {
  if (!(c > 0.0) || !(d >= 0.0)) throw DomainError("slit_avoid_prob: need c > 0 and d >= 0");
  const double t = d / c;
  if (t < 1e100) return -1.25 * std::log1p(t * t);
  return -2.5 * std::log(t);
}

double slit_avoid_prob(double c, double d) { return std::exp(log_slit_avoid_prob(c, d)); }

double two_slit_hit_prob(double L, double phi) {
  if (!(L > 0.0 && L < 1.0)) throw DomainError("two_slit_hit_prob: L must lie in (0,1)");
  if (!(phi > 0.0 && phi < kPi)) throw DomainError("two_slit_hit_prob: phi must lie in (0,pi)");
  const double p = 0.5 * (L + 1.0 / L);
  const double half_gap = 0.5 * (1.0 / L - L);  // p^2 - 1 = half_gap^2
  const double s2 = std::sin(phi) * std::sin(phi);
  const double ratio = p * s2 / (half_gap * half_gap + s2);
  return std::clamp(-std::expm1(1.25 * std::log(ratio)), 0.0, 1.0);
}

double joint_hit_prob(double u, double L, double one_minus_L) {
  if (!(u <= -1.0)) throw DomainError("joint_hit_prob: u must be <= -1");
  if (!(L > 0.0 && L <= 1.0 && one_minus_L > 0.0 && one_minus_L < 1.0)) {
    throw DomainError("joint_hit_prob: L must lie in (0,1)");
  }
  const double d = one_minus_L / (1.0 + L);
  const double alpha = d * d / (u * u);
  const double beta = d * d * u * u;
  const double eps = std::pow(one_minus_L, 4) / (8.0 * (L + L * L * L)) * (2.0 + alpha + beta);

  // D = 1 - G(alpha) - G(beta) + G(alpha + beta) >= 0
  double D;
  if (alpha < 0.1) {
    const double lb = std::log1p(beta);
    double bk = 1.0;
    double ak = 1.0;
    D = 0.0;
    for (int k = 1; k < 200; ++k) {
      bk *= (-1.25 - (k - 1)) / k;
      ak *= alpha;
      const double term = -bk * ak * (-std::expm1(-(1.25 + k) * lb));
      D += term;
      if (std::abs(bk * ak) < 1e-18 * std::abs(D) || ak < DBL_MIN) break;
    }
  } else {
    D = 1.0 - G(alpha) - G(beta) + G(alpha + beta);
  }
  const double g = -std::expm1(-1.25 * std::log1p(eps / (1.0 + alpha + beta)));
  const double J = D - G(alpha + beta) * g;
  return std::max(0.0, J);
}

double joint_hit_prob(double u, double L) { return joint_hit_prob(u, L, 1.0 - L); }

double boundary_u(double a, double x) {
  check_x(x, "boundary_u");
  const AnnulusParam p(a);
  return u_from(map_at_angle(0.5 * fold(x), p));
}

double change_factor(double a, double x) {
  check_x(x, "change_factor");
  const AnnulusParam p(a);
  return std::exp(log_change_factor(fold(x), p, modulus_L(p)));
}

Bracket bracket_F(double a, double x) {
  if (!(x >= 0.0 && x <= kTwoPi)) {
    throw DomainError("bracket_F: x must lie in [0, 2pi], got " + std::to_string(x));
  }
  const AnnulusParam p(a);
  if (x == 0.0 || x == kTwoPi) return {1.0, 1.0, a, x, 0.0, 0.0};
  const double y = fold(x);
  const SlitDiskModulus m = modulus_L(p);
  const double c = std::abs(u_from(map_at_angle(0.5 * y, p)));
  const double D = (1.0 + m.L) / m.one_minus_L;

  const double lcf = log_change_factor(y, p, m);
  const double l1 = log_slit_avoid_prob(c, D);
  const double l2 = log_slit_avoid_prob(1.0 / c, D);
  const double lmax = std::max(l1, l2);
  double log_lower = lcf + lmax + std::log1p(std::exp(std::min(l1, l2) - lmax));

  const double J = joint_hit_prob(-c, m.L, m.one_minus_L);
  double log_upper = log_lower;
  if (J > 0.0) log_upper = log_lower + std::log1p(std::exp(lcf + std::log(J) - log_lower));

  log_lower = std::min(0.0, log_lower);
  log_upper = std::min(0.0, log_upper);
  return {std::exp(log_lower), std::exp(log_upper), a, x, log_lower, log_upper};
}

}  // namespace annulus::conformal
