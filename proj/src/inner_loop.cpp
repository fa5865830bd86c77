#include "bilevel/inner_loop.hpp"

#include <algorithm>
#include <cmath>

namespace bilevel {

InnerRunResult gd_inner(BilevelOracle& oracle, const Vector& x, const Vector& y0, int t,
                        const std::optional<Vector>& ystar) {
  if (t < 0) throw ConfigError("inner step count must be >= 0");
  const auto& c = oracle.constants();
  const double beta = 2.0 / (c.L_g + c.mu_g);
  InnerRunResult out;
  out.y_final = y0;
  for (int s = 0; s < t; ++s) out.y_final -= beta * oracle.grad_y_g(x, out.y_final);
  out.iterations = t;
  out.grad_g_calls = t;
  if (ystar) {
    out.theoretical_bound = std::pow(gd_contraction_factor(c), t) * (y0 - *ystar).norm();
  }
  return out;
}

InnerRunResult sgd_inner(BilevelOracle& oracle, const Vector& x, const Vector& y0, int t,
                         const std::optional<Vector>& ystar) {
  if (t < 0) throw ConfigError("inner step count must be >= 0");
  const double mu = oracle.constants().mu_g;
  InnerRunResult out;
  out.y_final = y0;
  for (int s = 0; s < t; ++s) {
    out.y_final -= (1.0 / (mu * (s + 2))) * oracle.grad_y_g(x, out.y_final);
  }
  out.iterations = t;
  out.grad_g_calls = t;
  if (ystar) {
    out.theoretical_bound =
        sgd_inner_bound(oracle.constants(), t, (y0 - *ystar).norm(), inner_gradient_noise(oracle));
  }
  return out;
}

double sgd_inner_bound(const SmoothnessConstants& c, int t, double dist0, double noise_std) {
  return std::sqrt(2.0 / (t + 2.0)) * std::max(dist0, noise_std / c.mu_g);
}

double inner_gradient_noise(const BilevelOracle& oracle) {
  if (!oracle.noise()) return 0.0;
  return std::sqrt(static_cast<double>(oracle.dim_y())) * oracle.noise()->sigma_gy;
}

}  // namespace bilevel
