#include "bilevel/constants.hpp"

#include <cmath>
#include <string>

namespace bilevel {

namespace {

// A bound that is infinite over an unbounded region contributes nothing when
// its coefficient vanishes.
double times(double a, double b) { return (a == 0.0 || b == 0.0) ? 0.0 : a * b; }

}  // namespace

void SmoothnessConstants::validate() const {
  if (!(mu_g > 0.0)) throw ConfigError("mu_g must be positive");
  if (L_g < mu_g) throw ConfigError("L_g must be >= mu_g");
  const double values[] = {mu_f,  L_fx,  L_fy,     Lbar_fy,  Lbar_fx, C_fy,
                           L_gxy, L_gyy, Lbar_gxy, Lbar_gyy, C_gxy};
  // Norm bounds (C_*) may be +inf over an unbounded region.
  for (double v : values) {
    if (!(v >= 0.0)) throw ConfigError("smoothness constants must be nonnegative");
  }
  if (!std::isfinite(L_g)) throw ConfigError("L_g must be finite");
  for (const auto& opt : {C_fx, M_init, D_X}) {
    if (opt && !(*opt >= 0.0)) throw ConfigError("optional bounds must be nonnegative");
  }
}

DerivedConstants derived_constants(const SmoothnessConstants& c) {
  if (!(c.mu_g > 0.0)) throw ConfigError("derived constants need mu_g > 0");
  const double mu = c.mu_g;
  DerivedConstants d;
  d.C = c.L_fx + times(c.L_fy, c.C_gxy) / mu +
        times(c.C_fy, c.L_gxy / mu + times(c.L_gyy, c.C_gxy) / (mu * mu));
  // Triangle split through the inner solution: ||grad f(x2) - bar grad f(x2; y*(x1))|| is at
  // most C * (C_gxy / mu) ||x2 - x1||, the rest only moves x at fixed y.
  d.L_f = c.Lbar_fx + times(c.Lbar_fy + d.C, c.C_gxy) / mu +
          times(c.C_fy, c.Lbar_gxy / mu + times(c.Lbar_gyy, c.C_gxy) / (mu * mu));
  d.Q_g = c.L_g / mu;
  return d;
}

double gd_contraction_factor(const SmoothnessConstants& c) {
  const double q = c.L_g / c.mu_g;
  return (q - 1.0) / (q + 1.0);
}

}  // namespace bilevel
