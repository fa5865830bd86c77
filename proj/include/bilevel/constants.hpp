#pragma once

#include <optional>

#include "bilevel/types.hpp"

namespace bilevel {

/// Smoothness, strong-convexity and boundedness constants of a bilevel
/// problem, declared over a compact region (not estimated).
///
/// Naming: `L_fx` is the Lipschitz constant of grad_x f in y, `Lbar_*` are
/// Lipschitz constants in x, `C_*` are norm bounds.
struct SmoothnessConstants {
  double mu_g = 0.0;
  double L_g = 0.0;
  double mu_f = 0.0;

  double L_fx = 0.0;
  double L_fy = 0.0;
  double Lbar_fy = 0.0;
  /// Lipschitz constant of grad_x f in x. The composed-smoothness constant
  /// cannot be bounded without it.
  double Lbar_fx = 0.0;
  double C_fy = 0.0;

  double L_gxy = 0.0;
  double L_gyy = 0.0;
  double Lbar_gxy = 0.0;
  double Lbar_gyy = 0.0;
  double C_gxy = 0.0;

  /// Bound on ||grad_x f||; only the stochastic strongly convex bound needs it.
  std::optional<double> C_fx;
  /// max over X of ||y0 - y*(x)||.
  std::optional<double> M_init;
  std::optional<double> D_X;
  std::optional<double> f_star;

  /// Throws ConfigError on mu_g <= 0, L_g < mu_g or negative constants.
  void validate() const;
};

struct DerivedConstants {
  double C = 0.0;    ///< hypergradient error constant
  double L_f = 0.0;  ///< Lipschitz constant of x -> grad f(x, y*(x))
  double Q_g = 1.0;  ///< inner condition number L_g / mu_g
};

DerivedConstants derived_constants(const SmoothnessConstants& c);

/// (Q_g - 1) / (Q_g + 1): per-step contraction of gradient descent with step
/// 2 / (L_g + mu_g).
double gd_contraction_factor(const SmoothnessConstants& c);

}  // namespace bilevel
