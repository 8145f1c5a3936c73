// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>

#include "annulus/annulus_param.hpp"

// Slit-disk uniformization of the annulus and the restriction brackets on F.
namespace annulus::conformal {

using cplx = std::complex<double>;

/// Direct theta-series regime for the nome q^4 up to this q; modular above.
inline constexpr double kDirectMaxQ = 0.7;

struct SlitDiskModulus {
  double L;            ///< A_q is conformal to the unit disk minus [-L, L]
  double one_minus_L;  ///< 1 - L without cancellation
  double K;            ///< complete elliptic integral at nome q^4
  AnnulusParam param;
};

struct Bracket {
  double lower;
  double upper;
  double a;
  double x;
  double log_lower;
  double log_upper;
};

SlitDiskModulus modulus_L(const AnnulusParam& p);

/// f(e^{i x/2}) together with 1 - f computed without cancellation.
struct BoundaryImage {
  cplx w;
  cplx one_minus_w;
};
BoundaryImage map_f_boundary(double x, const AnnulusParam& p);

cplx map_f(double x, const AnnulusParam& p);
cplx map_f_deriv(double x, const AnnulusParam& p);

double slit_avoid_prob(double c, double d);
double log_slit_avoid_prob(double c, double d);
double two_slit_hit_prob(double L, double phi);
double joint_hit_prob(double u, double L);
/// Same, with 1 - L supplied exactly (needed once 1 - L is below ~1e-8).
double joint_hit_prob(double u, double L, double one_minus_L);

/// |f'(z1)(z1 - z2)/(w1 - w2)|^{5/4} for x in (0, pi]; x in (pi, 2pi) by symmetry.
double change_factor(double a, double x);

/// The point u = -cot(phi/2) <= -1 where phi = arg f(e^{ix/2}).
double boundary_u(double a, double x);

Bracket bracket_F(double a, double x);

}  // namespace annulus::conformal
