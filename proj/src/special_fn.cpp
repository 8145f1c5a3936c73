// SPDX-License-Identifier: Apache-2.0
#include "annulus/special_fn.hpp"

#include <cfloat>
#include <cmath>
#include <numbers>
#include <string>

#include "annulus/error.hpp"

namespace annulus {

AnnulusParam::AnnulusParam(double a, TruncationPolicy trunc)
    : a_(a), q_(std::exp(a)), trunc_(trunc) {
  if (!(a < 0.0) || !std::isfinite(a)) {
    throw DomainError("log-modulus a must be finite and negative, got " + std::to_string(a));
  }
  if (trunc.max_terms < 1 || !(trunc.rel_tol > 0.0)) {
    throw DomainError("truncation policy needs max_terms >= 1 and rel_tol > 0");
  }
}

AnnulusParam AnnulusParam::from_q(double q, TruncationPolicy trunc) {
  if (!(q > 0.0 && q < 1.0)) {
    throw DomainError("nome q must lie in (0, 1), got " + std::to_string(q));
  }
  return AnnulusParam(std::log(q), trunc);
}

namespace special {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kThetaImageMinQ = 0.3;

[[noreturn]] void truncation_failure(const char* what, const AnnulusParam& p) {
  throw TruncationError(std::string(what) + ": series did not converge within " +
                        std::to_string(p.trunc().max_terms) + " terms at q=" + std::to_string(p.q()));
}

// Tail of a series whose envelope decays at least geometrically with `ratio`.
bool tail_negligible(double envelope, double ratio, double scale, double rel_tol) {
  if (envelope < DBL_MIN) return true;
  if (ratio >= 1.0) return false;
  return envelope * ratio / (1.0 - ratio) <= rel_tol * scale;
}

// cot(z/2) without overflow for large |Im z|.
cplx cot_half(cplx z) {
  const cplx i(0.0, 1.0);
  if (z.imag() >= 0.0) {
    const cplx e = std::exp(i * z);
    return i * (1.0 + e) / (e - 1.0);
  }
  const cplx e = std::exp(-i * z);
  return i * (1.0 + e) / (1.0 - e);
}

// csc^2(z/2) = -4E/(E-1)^2 with E = exp(iz) or its inverse, whichever is small.
cplx csc2_half(cplx z) {
  const cplx i(0.0, 1.0);
  const cplx e = z.imag() >= 0.0 ? std::exp(i * z) : std::exp(-i * z);
  const cplx d = e - 1.0;
  return -4.0 * e / (d * d);
}

struct Reduced {
  cplx z;
  long m_re;  // z_original = z + 2 pi m_re + 2 i s m_im
  long m_im;
};

Reduced reduce(cplx z, double s) {
  const double mr = std::round(z.real() / kTwoPi);
  const double mi = std::round(z.imag() / (2.0 * s));
  return {cplx(z.real() - kTwoPi * mr, z.imag() - 2.0 * s * mi), static_cast<long>(mr),
          static_cast<long>(mi)};
}

void guard_pole(cplx z, double s, double guard) {
  double best = HUGE_VAL;
  for (int n = -1; n <= 1; ++n) {
    for (int m = -1; m <= 1; ++m) {
      best = std::min(best, std::abs(z - cplx(kTwoPi * n, 2.0 * s * m)));
    }
  }
  if (best < guard) {
    throw PoleError("argument within " + std::to_string(best) + " of the period lattice");
  }
}

// Image form of theta on (0, pi], scaled by exp(-log_scale).
struct ThetaImages {
  double log_scale;
  double t0, t1, t2;
};

ThetaImages theta_images(double x, double s) {
  ThetaImages r{0.5 * std::log(kPi / s) - (x - kPi) * (x - kPi) / (4.0 * s), 0.0, 0.0, 0.0};
  const double inv2s = 1.0 / (2.0 * s);
  for (int k = 0; k < 64; ++k) {
    const double xk = (2 * k + 1) * kPi;
    const double g = k == 0 ? 1.0 : std::exp(-(xk - kPi) * (xk + kPi - 2.0 * x) / (4.0 * s));
    const double h = std::exp(-(xk + kPi) * (2.0 * x + xk - kPi) / (4.0 * s));
    const double sgn = (k % 2 == 0) ? 1.0 : -1.0;
    const double dm = (x - xk) * inv2s;
    const double dp = (x + xk) * inv2s;
    const double diff = k == 0 ? -std::expm1(-kPi * x / s) : g - h;
    r.t0 += sgn * diff;
    r.t1 += sgn * (-dm * g + dp * h);
    r.t2 += sgn * ((dm * dm - inv2s) * g - (dp * dp - inv2s) * h);
    if (k > 0 && g < 1e-18 * std::abs(r.t0)) break;
  }
  return r;
}

// ln theta'(0) via images.
double log_theta_prime0(double s) {
  double sum = 0.0;
  for (int k = 0; k < 64; ++k) {
    const double xk = (2 * k + 1) * kPi;
    const double w = std::exp(-(xk * xk - kPi * kPi) / (4.0 * s));
    sum += ((k % 2 == 0) ? 1.0 : -1.0) * (xk / s) * w;
    if (k > 0 && w < 1e-18) break;
  }
  return 0.5 * std::log(kPi / s) - kPi * kPi / (4.0 * s) + std::log(sum);
}

double fold_to_half_period(double x) {
  double y = std::fmod(x, kTwoPi);
  if (y < 0.0) y += kTwoPi;
  return y > kPi ? kTwoPi - y : y;
}

}  // namespace

double eta_over_pi_series(const AnnulusParam& p) {
  const double q2 = p.q() * p.q();
  const auto& t = p.trunc();
  double r = 1.0;
  double sum = 0.0;
  for (int n = 1; n <= t.max_terms; ++n) {
    r *= q2;
    const double term = n * r / (1.0 - r);
    sum += term;
    const double ratio = q2 * (n + 1.0) / n;
    if (tail_negligible(term, ratio, std::max(1.0 / 12.0, 2.0 * sum), t.rel_tol)) {
      return 1.0 / 12.0 - 2.0 * sum;
    }
  }
  truncation_failure("eta", p);
}

double eta_over_pi_modular(const AnnulusParam& p) {
  const double s = -p.a();
  const double r = std::exp(-2.0 * kPi * kPi / s);
  double sum = 0.0;
  double rn = 1.0;
  for (int n = 1; n <= 64; ++n) {
    rn *= r;
    const double term = n * rn / (1.0 - rn);
    sum += term;
    if (term < 1e-18 * std::max(sum, 1e-300) || rn < DBL_MIN) break;
  }
  return 1.0 / (2.0 * s) - kPi * kPi / (12.0 * s * s) + 2.0 * kPi * kPi / (s * s) * sum;
}

double eta_over_pi(const AnnulusParam& p) {
  return p.q() <= kSeriesMaxQ ? eta_over_pi_series(p) : eta_over_pi_modular(p);
}

double eta(const AnnulusParam& p) { return kPi * eta_over_pi(p); }

cplx weier_zeta(cplx z, const AnnulusParam& p, double guard) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
    throw DomainError("weier_zeta: non-finite argument");
  }
  const double s = -p.a();
  const double eop = eta_over_pi(p);
  const Reduced red = reduce(z, s);
  guard_pole(red.z, s, guard);

  // zeta(z + 2pi) = zeta(z) + 2 eta, zeta(z + 2is) = zeta(z) + i(2 eta s/pi - 1).
  const cplx shift = 2.0 * kPi * eop * static_cast<double>(red.m_re) +
                     cplx(0.0, (2.0 * eop * s - 1.0) * static_cast<double>(red.m_im));

  const cplx w = red.z;
  const cplx i(0.0, 1.0);
  const cplx e = std::exp(i * w);
  const cplx einv = 1.0 / e;
  const double q2 = p.q() * p.q();
  const double grow = std::exp(std::abs(w.imag()));
  const auto& t = p.trunc();

  cplx sum = 0.0;
  cplx en = 1.0, eninv = 1.0;
  double r = 1.0, env_grow = 1.0;
  const cplx base = eop * w + 0.5 * cot_half(w);
  bool done = false;
  for (int n = 1; n <= t.max_terms; ++n) {
    r *= q2;
    en *= e;
    eninv *= einv;
    env_grow *= grow;
    const double c = r / (1.0 - r);
    sum += c * (en - eninv);
    if (tail_negligible(c * env_grow, q2 * grow, std::max(1.0, std::abs(base)), t.rel_tol)) {
      done = true;
      break;
    }
  }
  if (!done) truncation_failure("weier_zeta", p);
  // 2 sum c_n sin(nz) = -i sum c_n (E^n - E^-n)
  return base - i * sum + shift;
}

cplx weier_p(cplx z, const AnnulusParam& p, double guard) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
    throw DomainError("weier_p: non-finite argument");
  }
  const double s = -p.a();
  const Reduced red = reduce(z, s);
  guard_pole(red.z, s, guard);
  const cplx w = red.z;
  const cplx i(0.0, 1.0);
  const cplx e = std::exp(i * w);
  const cplx einv = 1.0 / e;
  const double q2 = p.q() * p.q();
  const double grow = std::exp(std::abs(w.imag()));
  const auto& t = p.trunc();

  const cplx base = -eta_over_pi(p) + 0.25 * csc2_half(w);
  cplx sum = 0.0;
  cplx en = 1.0, eninv = 1.0;
  double r = 1.0, env_grow = 1.0;
  bool done = false;
  for (int n = 1; n <= t.max_terms; ++n) {
    r *= q2;
    en *= e;
    eninv *= einv;
    env_grow *= grow;
    const double c = n * r / (1.0 - r);
    sum += c * (en + eninv);
    if (tail_negligible(c * env_grow, q2 * grow * (n + 1.0) / n, std::max(1.0, std::abs(base)),
                        t.rel_tol)) {
      done = true;
      break;
    }
  }
  if (!done) truncation_failure("weier_p", p);
  return base - sum;
}

double theta1(double x, const AnnulusParam& p) {
  if (!std::isfinite(x)) throw DomainError("theta1: non-finite argument");
  // The alternating q-series loses relative accuracy where theta is tiny
  // (x near 0 mod 2pi, q not small); the image form does not.
  if (p.q() > kThetaImageMinQ) {
    const double s = -p.a();
    double y = std::fmod(x, kTwoPi);
    double sign = (std::fmod(std::floor(x / kTwoPi), 2.0) == 0.0) ? 1.0 : -1.0;
    if (y < 0.0) y += kTwoPi;
    if (y > kPi) y = kTwoPi - y;
    const ThetaImages im = theta_images(y, s);
    return sign * std::exp(im.log_scale) * im.t0;
  }
  const double a = p.a();
  const auto& t = p.trunc();
  double sum = 0.0;
  for (int n = 0; n < t.max_terms; ++n) {
    const double h = n + 0.5;
    const double env = std::exp(a * h * h);
    sum += ((n % 2 == 0) ? 1.0 : -1.0) * env * std::sin(h * x);
    const double ratio = std::exp(2.0 * a * (n + 1));
    if (tail_negligible(env, ratio, std::max(std::abs(sum), 1e-300), t.rel_tol)) {
      return 2.0 * sum;
    }
  }
  truncation_failure("theta1", p);
}

double log_theta_ratio(double x, const AnnulusParam& p) {
  if (!std::isfinite(x)) throw DomainError("log_theta_ratio: non-finite argument");
  const double y = fold_to_half_period(x);
  if (p.q() > kSeriesMaxQ) {
    const double s = -p.a();
    if (y < 1e-7) return 0.5 * y * y * (1.0 / 12.0 - eta_over_pi(p));
    const ThetaImages im = theta_images(y, s);
    return im.log_scale + std::log(im.t0) - std::log(std::sin(0.5 * y)) -
           std::log(2.0) - log_theta_prime0(s);
  }
  const double q2 = p.q() * p.q();
  const double sh = std::sin(0.5 * y);
  const double four_sh2 = 4.0 * sh * sh;
  const auto& t = p.trunc();
  double r = 1.0;
  double sum = 0.0;
  for (int n = 1; n <= t.max_terms; ++n) {
    r *= q2;
    const double one_minus = 1.0 - r;
    const double term = std::log1p(r * four_sh2 / (one_minus * one_minus));
    sum += term;
    if (tail_negligible(term, q2 / (one_minus * one_minus), std::max(sum, 1e-300), t.rel_tol) ||
        r * four_sh2 < DBL_MIN) {
      return sum;
    }
  }
  truncation_failure("log_theta_ratio", p);
}

double theta1_over_sin(double x, const AnnulusParam& p) {
  if (!std::isfinite(x)) throw DomainError("theta1_over_sin: non-finite argument");
  if (p.q() > kSeriesMaxQ) {
    const double s = -p.a();
    return std::exp(std::log(2.0) + log_theta_prime0(s) + log_theta_ratio(x, p));
  }
  const double q2 = p.q() * p.q();
  const double sh = std::sin(0.5 * x);
  const double four_sh2 = 4.0 * sh * sh;
  const auto& t = p.trunc();
  double r = 1.0;
  double log_sum = std::log(2.0) + 0.25 * p.a();
  for (int n = 1; n <= t.max_terms; ++n) {
    r *= q2;
    const double one_minus = 1.0 - r;
    // (1 - 2r cos x + r^2) = (1-r)^2 + 4 r sin^2(x/2)
    log_sum += std::log1p(-r) + std::log(one_minus * one_minus + r * four_sh2);
    if (tail_negligible(4.0 * r, q2, 1.0, t.rel_tol)) return std::exp(log_sum);
  }
  truncation_failure("theta1_over_sin", p);
}

LogThetaDerivs log_theta_derivs(double x, const AnnulusParam& p) {
  if (!(x > 0.0 && x < kTwoPi)) throw DomainError("log_theta_derivs: x must lie in (0, 2pi)");
  const bool upper = x > kPi;
  const double y = upper ? kTwoPi - x : x;
  LogThetaDerivs out{};
  if (p.q() > kSeriesMaxQ) {
    const ThetaImages im = theta_images(y, -p.a());
    out.d1 = im.t1 / im.t0;
    out.d2 = im.t2 / im.t0 - out.d1 * out.d1;
  } else {
    const double q2 = p.q() * p.q();
    const double s1 = std::sin(y), c1 = std::cos(y);
    const double sh = std::sin(0.5 * y);
    const auto& t = p.trunc();
    double sn = s1, cn = c1, r = 1.0;
    double ssum = 0.0, csum = 0.0;
    bool done = false;
    for (int n = 1; n <= t.max_terms; ++n) {
      r *= q2;
      const double c = r / (1.0 - r);
      ssum += c * sn;
      csum += n * c * cn;
      if (tail_negligible(n * c, q2 * (n + 1.0) / n, 1.0, t.rel_tol)) {
        done = true;
        break;
      }
      const double sn1 = sn * c1 + cn * s1;
      cn = cn * c1 - sn * s1;
      sn = sn1;
    }
    if (!done) truncation_failure("log_theta_derivs", p);
    out.d1 = 0.5 * std::cos(0.5 * y) / sh + 2.0 * ssum;
    out.d2 = -0.25 / (sh * sh) + 2.0 * csum;
  }
  if (upper) out.d1 = -out.d1;
  return out;
}

cplx xi1(cplx z, double x, double guard) {
  const double sx = std::sin(0.5 * x);
  if (std::abs(sx) < guard) throw DomainError("xi1: x must not lie in 2pi*Z");
  const cplx d = std::sin(0.5 * (z - x));
  // dist(z - x, 2pi Z) via |sin((z-x)/2)| ~ |z-x|/2 near the pole.
  if (std::abs(d) < 0.5 * guard) throw PoleError("xi1: argument within guard radius of the pole z = x");
  const cplx sz = std::sin(0.5 * z);
  return sz * sz * sz / (sx * sx * sx * d);
}

cplx xi2(cplx z, double x, const AnnulusParam& p, double guard) {
  const double s = -p.a();
  guard_pole(reduce(cplx(x, 0.0), s).z, s, guard);
  const cplx zeta_x = weier_zeta(cplx(x, 0.0), p, guard);
  return 2.0 * (weier_zeta(z - x, p, guard) - eta_over_pi(p) * z + zeta_x);
}

double dilog_pair(double x) {
  if (!(x >= 0.0 && x <= kTwoPi)) throw DomainError("dilog_pair: x must lie in [0, 2pi]");
  return kPi * kPi / 3.0 - kPi * x + 0.5 * x * x;
}

}  // namespace special
}  // namespace annulus
