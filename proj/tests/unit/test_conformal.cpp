// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "annulus/conformal.hpp"
#include "annulus/error.hpp"

using namespace annulus;
using namespace annulus::conformal;
using std::numbers::pi;

namespace {

long double agm(long double a, long double b) {
  for (int i = 0; i < 100 && std::abs(a - b) > 1e-30L * a; ++i) {
    const long double m = 0.5L * (a + b);
    b = std::sqrt(a * b);
    a = m;
  }
  return a;
}

// Oracle: K(k)/K'(k) ratio with k' the free variable; solve K'/K = 4|a|/pi
// for k' by bisection in log k'. Returns 1 - L = 1 - sqrt(k).
long double one_minus_L_agm(double a) {
  const long double target = 4.0L * -a / pi;
  auto ratio = [](long double kp) {
    const long double k = std::sqrt((1 - kp) * (1 + kp));
    // K(k) = pi/(2 agm(1,k')), K'(k) = K(k') = pi/(2 agm(1,k))
    return agm(1, kp) / agm(1, k);  // = K'(k)/K(k)
  };
  long double lo = -700, hi = 0;  // log k'
  for (int i = 0; i < 200; ++i) {
    const long double mid = 0.5L * (lo + hi);
    // K'/K increases with k'
    if (ratio(std::exp(mid)) < target) lo = mid; else hi = mid;
  }
  const long double kp = std::exp(0.5L * (lo + hi));
  return -std::expm1(0.25L * std::log1p(-kp * kp));
}

// least-squares slope of y against x
double slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (size_t i = 0; i < x.size(); ++i) { mx += x[i]; my += y[i]; }
  mx /= x.size(); my /= y.size();
  double sxy = 0, sxx = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace

TEST_CASE("modulus_L: limits, monotonicity, AGM oracle") {
  CHECK(modulus_L(AnnulusParam::from_q(1e-6)).L < 1e-5);
  double prev = 0.0;
  for (double q : {0.05, 0.2, 0.5, 0.69, 0.71, 0.9, 0.99}) {
    const SlitDiskModulus m = modulus_L(AnnulusParam::from_q(q));
    CHECK(m.L >= prev);
    CHECK(m.one_minus_L > 0.0);  // L itself rounds to 1 once 1 - L < 1e-16
    CHECK(std::abs(m.L + m.one_minus_L - 1.0) < 1e-15);
    prev = m.L;
  }
  for (double q : {0.3, 0.6, 0.7, 0.75, 0.9}) {
    const AnnulusParam p = AnnulusParam::from_q(q);
    const SlitDiskModulus m = modulus_L(p);
    const double oml = static_cast<double>(one_minus_L_agm(p.a()));
    CHECK(std::abs(m.one_minus_L - oml) < 1e-10);
    CHECK(std::abs(m.one_minus_L - oml) < 1e-9 * oml);
  }
  // 1 - L ~ exp(pi^2/(4a))
  std::vector<double> xs, ys;
  for (double a : {-0.2, -0.1, -0.05}) {
    xs.push_back(pi * pi / (4 * a));
    ys.push_back(std::log(modulus_L(AnnulusParam(a)).one_minus_L));
  }
  CHECK(slope(xs, ys) == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("K agrees between regimes and with AGM") {
  for (double q : {0.5, 0.7, 0.7000001, 0.8}) {
    const AnnulusParam p = AnnulusParam::from_q(q);
    const SlitDiskModulus m = modulus_L(p);
    const long double k = m.L * (long double)m.L;
    const long double kp = std::sqrt((1 - k) * (1 + k));
    const double K = static_cast<double>(pi / (2 * agm(1, kp)));
    CHECK(std::abs(m.K - K) < 1e-11 * K);
  }
}

TEST_CASE("map_f: boundary to boundary, conjugate symmetry, f(i) = i") {
  for (auto [x, q] : {std::pair{pi / 2, 0.3}, std::pair{pi, 0.6}, std::pair{1.0, 0.8}, std::pair{0.2, 0.95}}) {
    const AnnulusParam p = AnnulusParam::from_q(q);
    const cplx w = map_f(x, p);
    CHECK(std::abs(std::abs(w) - 1.0) < 1e-10);
    CHECK(w.imag() > 0.0);
    // conjugate point e^{-ix/2} is e^{i(4pi - x)/2}; evaluate via the full-circle angle 2pi - x/2
    const BoundaryImage bi = map_f_boundary(x, p);
    CHECK(std::abs(std::abs(bi.one_minus_w - (1.0 - w))) < 1e-12);
  }
  for (double q : {0.2, 0.6, 0.7, 0.8, 0.95}) {
    const cplx w = map_f(pi, AnnulusParam::from_q(q));
    CHECK(std::abs(w - cplx(0.0, 1.0)) < 1e-10);
  }
}

TEST_CASE("map_f regimes agree at the switch") {
  for (double x : {0.3, 1.5, pi, 4.0}) {
    const cplx a = map_f(x, AnnulusParam::from_q(0.7));
    const cplx b = map_f(x, AnnulusParam::from_q(0.7 + 1e-13));
    CHECK(std::abs(a - b) < 1e-11);
    const cplx da = map_f_deriv(x, AnnulusParam::from_q(0.7));
    const cplx db = map_f_deriv(x, AnnulusParam::from_q(0.7 + 1e-13));
    CHECK(std::abs(da - db) < 1e-10 * std::abs(da));
  }
}

TEST_CASE("map_f_deriv: finite differences and conjugate modulus") {
  for (auto [x, q] : {std::pair{pi / 2, 0.5}, std::pair{2.0, 0.85}, std::pair{0.7, 0.3}}) {
    const AnnulusParam p = AnnulusParam::from_q(q);
    const double h = 1e-5;
    // z = e^{ix/2}, dz/dx = (i/2) z, so f'(z) = (df/dx) / ((i/2) z)
    const cplx dfdx = (map_f(x + h, p) - map_f(x - h, p)) / (2 * h);
    const cplx fd = dfdx / (cplx(0.0, 0.5) * std::polar(1.0, x / 2));
    const cplx an = map_f_deriv(x, p);
    CHECK(std::abs(fd - an) < 1e-6 * std::max(1.0, std::abs(an)));
  }
  // |f'(z1)| = |f'(z2)|: z2 = conj(z1) corresponds to the reflected boundary
  // point, where f is evaluated by conjugation; equal moduli follow from the
  // same theta quotient, checked through the x -> 2pi - x reflected image.
  const AnnulusParam p = AnnulusParam::from_q(0.4);
  const double x = 1.0;
  const cplx z1 = std::polar(1.0, x / 2);
  const cplx w1 = map_f(x, p);
  const cplx d1 = map_f_deriv(x, p);
  // Schwarz reflection: f(conj z) = conj f(z) so f'(conj z) = conj f'(z)
  const double h = 1e-5;
  const cplx zc = std::conj(z1);
  const cplx fd2 = (std::conj(map_f(x + h, p)) - std::conj(map_f(x - h, p))) /
                   (2 * h) / (cplx(0.0, -0.5) * zc);
  CHECK(std::abs(std::abs(fd2) - std::abs(d1)) < 1e-6);
  CHECK(std::abs(w1) == doctest::Approx(1.0));
}

TEST_CASE("map_f asymptotics as a -> 0") {
  for (double x : {pi / 2, 2.0}) {
    std::vector<double> xs, y1, y2;
    for (double a : {-0.2, -0.1, -0.05}) {
      const AnnulusParam p(a);
      xs.push_back(pi * (pi - x) / (4 * a));
      y1.push_back(std::log(std::abs(map_f_boundary(x, p).one_minus_w)));
      y2.push_back(std::log(std::abs(map_f_deriv(x, p))));
    }
    CHECK(slope(xs, y1) == doctest::Approx(1.0).epsilon(0.05));
    CHECK(slope(xs, y2) == doctest::Approx(1.0).epsilon(0.05));
  }
}

TEST_CASE("slit_avoid_prob") {
  CHECK(slit_avoid_prob(1, 1) == doctest::Approx(0.4204482076268573).epsilon(1e-14));
  CHECK(slit_avoid_prob(1, 0) == 1.0);
  double prev = 1.0;
  for (double d = 0.5; d < 1e6; d *= 3) {
    const double v = slit_avoid_prob(2.0, d);
    CHECK(v < prev);
    prev = v;
  }
  CHECK(prev < 1e-12);
  CHECK_THROWS_AS(slit_avoid_prob(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(slit_avoid_prob(1.0, -1.0), DomainError);
  // avoid + hit complement
  const double L = 0.8, u = -2.0, d = (1 - L) / (1 + L);
  const double avoid = slit_avoid_prob(-u, d);
  const double hit = 1.0 - std::pow(u * u / (u * u + d * d), 1.25);
  CHECK(std::abs(avoid + hit - 1.0) < 1e-14);
}

TEST_CASE("two_slit_hit_prob") {
  CHECK(two_slit_hit_prob(1.0 - 1e-9, 1.0) < 1e-6);
  for (double L : {0.2, 0.6, 0.9}) {
    const double p = 0.5 * (L + 1 / L);
    CHECK(std::abs(two_slit_hit_prob(L, pi / 2) - (1.0 - std::pow(p, -1.25))) < 1e-14);
  }
  // E:p2 expansion of the reciprocal ratio
  const double L = 0.8, phi = 1.0;
  const double p = 0.5 * (L + 1 / L);
  const double s2 = std::sin(phi) * std::sin(phi);
  const double recip = (p * p - 1 + s2) / (p * s2);
  const double u = -1.0 / std::tan(phi / 2);
  const double d2 = std::pow((1 - L) / (1 + L), 2);
  const double expansion = 1 + d2 * (u * u + 1 / (u * u)) +
                           std::pow(1 - L, 4) / (8 * (L + L * L * L)) * (2 + d2 * (u * u + 1 / (u * u)));
  CHECK(std::abs(recip - expansion) < 1e-12);
}

TEST_CASE("u-phi identity") {
  for (int i = 1; i < 100; ++i) {
    const double phi = pi * i / 100;
    const double u = -1.0 / std::tan(phi / 2);
    CHECK(std::abs(4 / (std::sin(phi) * std::sin(phi)) - (u + 1 / u) * (u + 1 / u)) <
          1e-13 * 4 / (std::sin(phi) * std::sin(phi)));
  }
}

TEST_CASE("joint_hit_prob: inclusion bounds, expansion, direct formula") {
  for (double L : {0.5, 0.7, 0.9, 0.99}) {
    for (double u = -10.0; u <= -1.0; u += 0.75) {
      const double d = (1 - L) / (1 + L);
      const double J = joint_hit_prob(u, L);
      const double h1 = 1 - slit_avoid_prob(-u, d);
      const double h2 = 1 - slit_avoid_prob(-1 / u, d);
      CHECK(J >= 0.0);
      CHECK(J <= std::min(h1, h2) * (1 + 1e-12));
      // naive inclusion-exclusion where it is well conditioned
      const double phi = 2 * std::atan(-1 / u);
      const double naive = h1 + h2 - two_slit_hit_prob(L, phi);
      if (L <= 0.9) CHECK(std::abs(J - naive) < 1e-12);
    }
  }
  for (double u : {-1.0, -3.0}) {
    const double oml = 1e-3;
    const double J = joint_hit_prob(u, 1 - oml, oml);
    CHECK(J / (5.0 / 256 * std::pow(oml, 4)) == doctest::Approx(1.0).epsilon(0.01));
    const double J2 = joint_hit_prob(u, 1 - 1e-2, 1e-2);
    CHECK(std::abs(J2 / (5.0 / 256 * 1e-8) - 1) < 0.1);
  }
  // exp(pi^2/a) decay with the true L(q)
  std::vector<double> xs, ys;
  for (double a : {-0.3, -0.2, -0.1, -0.05}) {
    const SlitDiskModulus m = modulus_L(AnnulusParam(a));
    xs.push_back(pi * pi / a);
    ys.push_back(std::log(joint_hit_prob(boundary_u(a, pi), m.L, m.one_minus_L)));
  }
  CHECK(slope(xs, ys) == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("change_factor") {
  CHECK(std::abs(change_factor(std::log(1e-4), 1.0) - 1.0) < 1e-3);
  for (double q = 0.1; q <= 0.9; q += 0.1) {
    for (double x = 0.1; x <= pi; x += 0.3) {
      const double cf = change_factor(std::log(q), x);
      CHECK(cf > 0.0);
      CHECK(std::isfinite(cf));
    }
  }
  // a ln(factor) -> 0: the factor is subexponential in 1/a
  const double r1 = -0.1 * std::log(change_factor(-0.1, pi));
  const double r2 = -0.02 * std::log(change_factor(-0.02, pi));
  CHECK(std::abs(r2) < std::abs(r1));
  CHECK(std::abs(r2) < 0.2);
  // leading behaviour (pi sin(x/2) / (2|a|))^{5/4}
  for (double x : {pi / 2, pi}) {
    const double lead = std::pow(pi * std::sin(x / 2) / (2 * 0.02), 1.25);
    CHECK(change_factor(-0.02, x) / lead == doctest::Approx(1.0).epsilon(0.05));
  }
  CHECK(change_factor(-0.5, 1.0) == doctest::Approx(change_factor(-0.5, 2 * pi - 1.0)));
}

TEST_CASE("bracket_F is a valid interval") {
  for (double q : {0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.95}) {
    for (double x : {0.01, 0.5, pi / 2, 2.0, pi, 4.0, 6.0}) {
      const Bracket b = bracket_F(std::log(q), x);
      CHECK(0.0 <= b.lower);
      CHECK(b.lower <= b.upper);
      CHECK(b.upper <= 1.0);
    }
  }
  CHECK(bracket_F(-1.0, 0.0).lower == 1.0);
  CHECK(bracket_F(-1.0, 0.0).upper == 1.0);
  // monotone: larger hole (a closer to 0) can only decrease the bounds
  double prev_lo = 1.0, prev_hi = 1.0;
  for (double a : {-3.0, -2.0, -1.0, -0.5, -0.2, -0.1}) {
    const Bracket b = bracket_F(a, pi);
    CHECK(b.lower <= prev_lo + 1e-15);
    CHECK(b.upper <= prev_hi + 1e-15);
    prev_lo = b.lower;
    prev_hi = b.upper;
  }
  CHECK_THROWS_AS(bracket_F(0.1, 1.0), DomainError);
  CHECK_THROWS_AS(bracket_F(-1.0, 7.0), DomainError);
}
