#pragma once

#include "bilevel/oracle.hpp"

namespace bilevel {

/// Randomized truncated Neumann-series estimate of [hess_yy g]^{-1}:
///   (b / L_g) * prod_{i=1..p} (I - G_i / L_g),   p ~ U{0, ..., b-1},
/// with G_i independent Hessian samples and the empty product equal to I.
struct HiaEstimate {
  Matrix h_yy;
  int p_drawn = 0;
  int b = 1;
  int hessian_samples_used = 0;
};

/// Draws p from `truncation`, then p Hessian samples. hc_g += p.
HiaEstimate hia_estimate(BilevelOracle& oracle, const Vector& x, const Vector& y, int b,
                         RngStream& truncation);

/// Same estimator at a fixed depth p in [0, b-1].
HiaEstimate hia_estimate_at_depth(BilevelOracle& oracle, const Vector& x, const Vector& y, int b,
                                  int p);

struct HiaApplied {
  Vector value;  ///< H_yy * v
  int p_drawn = 0;
  int b = 1;
};

/// H_yy * v through p matrix-vector products, never forming the product
/// chain. Consumes the same random draws as hia_estimate, so for equal
/// stream states the result equals hia_estimate(...).h_yy * v.
HiaApplied hia_apply(BilevelOracle& oracle, const Vector& x, const Vector& y, int b,
                     const Vector& v, RngStream& truncation);

/// (1 / mu_g) * ((Q_g - 1) / Q_g)^b, the bias bound of the estimator.
double hia_bias_bound(const SmoothnessConstants& c, int b);
/// 2 / mu_g, bound on E||[hess_yy g]^{-1} - H_yy||.
double hia_second_moment_bound(const SmoothnessConstants& c);

}  // namespace bilevel
