// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>

#include "annulus/annulus_param.hpp"

// Elliptic and theta functions on the lattice {2n*pi + 2m*i*a}.
//
// Series are summed in the nome q; above kSeriesMaxQ the cheap kernels switch
// to the image (Poisson-resummed) form of theta, which converges like
// exp(-pi^2/|a|).
namespace annulus::special {

using cplx = std::complex<double>;

inline constexpr double kDefaultPoleGuard = 1e-8;
inline constexpr double kSeriesMaxQ = 0.9;

double eta(const AnnulusParam& p);
/// eta/pi, switching to the modular form for q > kSeriesMaxQ.
double eta_over_pi(const AnnulusParam& p);
/// Direct q-series for eta/pi (throws TruncationError at the term cap).
double eta_over_pi_series(const AnnulusParam& p);
/// Modular-transformed eta/pi; converges like exp(-2 pi^2/|a|).
double eta_over_pi_modular(const AnnulusParam& p);

cplx weier_zeta(cplx z, const AnnulusParam& p, double guard = kDefaultPoleGuard);
cplx weier_p(cplx z, const AnnulusParam& p, double guard = kDefaultPoleGuard);

/// theta(x|a) = 2 sum (-1)^n q^{(n+1/2)^2} sin((n+1/2)x); solves d_a theta = -theta''.
double theta1(double x, const AnnulusParam& p);
/// theta1(x)/sin(x/2) from the product 2 q^{1/4} prod (1-q^{2n})(1-2q^{2n}cos x+q^{4n}).
double theta1_over_sin(double x, const AnnulusParam& p);

/// ln[ prod (1-2q^{2n}cos x+q^{4n}) / (1-q^{2n})^2 ], i.e. ln of the ratio
/// (theta1/sin)(x) / (theta1/sin)(0). Nonnegative.
double log_theta_ratio(double x, const AnnulusParam& p);

struct LogThetaDerivs {
  double d1;  ///< (ln theta)'  = zeta(x) - eta x/pi
  double d2;  ///< (ln theta)'' = -wp(x) - eta/pi
};
/// First two x-derivatives of ln theta1 for x in (0, 2pi).
LogThetaDerivs log_theta_derivs(double x, const AnnulusParam& p);

/// Half-strip chordal vector field, regular at z = 0, pole of residue 2 at z = x.
cplx xi1(cplx z, double x, double guard = kDefaultPoleGuard);
/// Komatu-Loewner vector field 2[zeta(z-x) - eta z/pi + zeta(x)].
cplx xi2(cplx z, double x, const AnnulusParam& p, double guard = kDefaultPoleGuard);

/// Li2(e^{ix}) + Li2(e^{-ix}) for x in [0, 2pi].
double dilog_pair(double x);

}  // namespace annulus::special
