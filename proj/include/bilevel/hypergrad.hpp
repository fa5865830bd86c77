#pragma once

#include <optional>

#include "bilevel/oracle.hpp"

namespace bilevel {

struct HypergradResult {
  Vector grad;
  /// True when grad_y f was nonzero, i.e. the implicit correction
  /// hess_xy g * [hess_yy g]^{-1} grad_y f contributed to `grad`.
  bool m_matrix_applied = false;
  /// C * ||y* - ybar||, present when y* was supplied.
  std::optional<double> error_bound;
};

/// Approximate hypergradient at (x, ybar):
///   grad_x f - hess_xy g * [hess_yy g]^{-1} * grad_y f,
/// with the inverse applied through a Cholesky solve. Exact oracles only.
/// Counts gc_f += 1, hc_g += 2.
HypergradResult hypergradient(BilevelOracle& oracle, const Vector& x, const Vector& ybar,
                              const std::optional<Vector>& ystar = std::nullopt);

/// Jacobian dy*/dx (m x n) at (x, ystar): -(hess_xy g * [hess_yy g]^{-1})^T.
/// Counts hc_g += 2.
Matrix implicit_jacobian(BilevelOracle& oracle, const Vector& x, const Vector& ystar);

/// C * dist, the worst-case hypergradient error for an inner error `dist`.
double hypergrad_error_bound(const SmoothnessConstants& c, double dist);

/// Solves H * X = rhs for symmetric positive definite H. Throws NumericalError
/// when a Cholesky pivot falls below 1e-12 * scale.
Matrix spd_solve(const Matrix& hessian, const Matrix& rhs, double scale);

}  // namespace bilevel
