#include "bilevel/hypergrad.hpp"

#include <string>

namespace bilevel {

Matrix spd_solve(const Matrix& hessian, const Matrix& rhs, double scale) {
  Eigen::LLT<Matrix> llt(hessian);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("inner Hessian is not positive definite");
  }
  const double floor = 1e-12 * scale;
  const Matrix& l = llt.matrixLLT();
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    // Pivots of H = L L^T are the squared diagonal entries of L.
    const double pivot = l(i, i) * l(i, i);
    if (!(pivot >= floor)) {
      throw NumericalError("inner Hessian pivot " + std::to_string(pivot) + " below tolerance");
    }
  }
  return llt.solve(rhs);
}

HypergradResult hypergradient(BilevelOracle& oracle, const Vector& x, const Vector& ybar,
                              const std::optional<Vector>& ystar) {
  if (oracle.is_stochastic()) {
    throw ConfigError("hypergradient needs an exact oracle");
  }
  const auto g = oracle.grad_f(x, ybar);
  const Matrix hxy = oracle.hess_xy_g(x, ybar);
  const Matrix hyy = oracle.hess_yy_g(x, ybar);

  HypergradResult out;
  out.m_matrix_applied = g.y.squaredNorm() > 0.0;
  const Vector v = spd_solve(hyy, g.y, oracle.constants().L_g);
  out.grad = g.x - hxy * v;
  if (ystar) out.error_bound = hypergrad_error_bound(oracle.constants(), (*ystar - ybar).norm());
  return out;
}

Matrix implicit_jacobian(BilevelOracle& oracle, const Vector& x, const Vector& ystar) {
  const Matrix hxy = oracle.hess_xy_g(x, ystar);
  const Matrix hyy = oracle.hess_yy_g(x, ystar);
  // H_yy^{-1} H_xy^T is (H_xy H_yy^{-1})^T since H_yy is symmetric.
  return -spd_solve(hyy, hxy.transpose(), oracle.constants().L_g);
}

double hypergrad_error_bound(const SmoothnessConstants& c, double dist) {
  if (!(dist >= 0.0)) throw ConfigError("distance must be nonnegative");
  return derived_constants(c).C * dist;
}

}  // namespace bilevel
