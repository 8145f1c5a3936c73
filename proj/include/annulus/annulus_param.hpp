// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace annulus {

struct TruncationPolicy {
  double rel_tol = 1e-14;
  int max_terms = 400;
};

/// Log-modulus a = ln q < 0 of the annulus {q < |z| < 1}, with the cached
/// nome and the truncation policy used by every series evaluation.
class AnnulusParam {
 public:
  explicit AnnulusParam(double a, TruncationPolicy trunc = {});
  static AnnulusParam from_q(double q, TruncationPolicy trunc = {});

  double a() const noexcept { return a_; }
  double q() const noexcept { return q_; }
  const TruncationPolicy& trunc() const noexcept { return trunc_; }

 private:
  double a_;
  double q_;
  TruncationPolicy trunc_;
};

}  // namespace annulus
