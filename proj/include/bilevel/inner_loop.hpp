#pragma once

#include <cstdint>
#include <optional>

#include "bilevel/oracle.hpp"

namespace bilevel {

struct InnerRunResult {
  Vector y_final;
  int iterations = 0;
  std::int64_t grad_g_calls = 0;
  /// Rate bound on ||y_t - y*(x)||, present when y* was supplied.
  std::optional<double> theoretical_bound;
};

/// t steps of gradient descent on g(x, .) with step 2 / (L_g + mu_g).
InnerRunResult gd_inner(BilevelOracle& oracle, const Vector& x, const Vector& y0, int t,
                        const std::optional<Vector>& ystar = std::nullopt);

/// t steps of stochastic gradient descent on g(x, .) with step
/// 1 / (mu_g (s + 2)) at step s. Gradient samples come from the oracle's
/// zeta_grad stream.
InnerRunResult sgd_inner(BilevelOracle& oracle, const Vector& x, const Vector& y0, int t,
                         const std::optional<Vector>& ystar = std::nullopt);

/// sqrt(2 / (t + 2)) * max(dist0, noise_std / mu_g). Holds in expectation.
double sgd_inner_bound(const SmoothnessConstants& c, int t, double dist0, double noise_std);

/// Standard deviation of the inner gradient noise as it enters the SGD bound:
/// sqrt(m) * sigma_gy (total, not per component). Zero for exact oracles.
double inner_gradient_noise(const BilevelOracle& oracle);

}  // namespace bilevel
