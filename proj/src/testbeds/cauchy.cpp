#include <cmath>

#include "bilevel/rng.hpp"
#include "bilevel/testbeds.hpp"
#include "detail.hpp"

namespace bilevel {

CauchyBilevel::CauchyBilevel(const Spec& spec) : region_(spec.region) {
  const int m = static_cast<int>(spec.inner_spectrum.size());
  const int n = spec.dim_x;
  if (m < 1 || n < m) throw ConfigError("cauchy testbed needs 1 <= m <= n");
  for (double e : spec.inner_spectrum) {
    if (!(e > 0.0)) throw ConfigError("inner spectrum must be positive");
  }
  const Matrix U = random_orthogonal(m, derive_seed(spec.seed, "inner_basis"));
  const Vector lam = Eigen::Map<const Vector>(spec.inner_spectrum.data(), m);
  A_ = U * lam.asDiagonal() * U.transpose();

  RngStream rng("cauchy", derive_seed(spec.seed, "cauchy"));
  B_.resize(m, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < m; ++i) B_(i, j) = spec.coupling_scale * rng.gaussian() / std::sqrt(n);
  }
  b_.resize(m);
  target_.resize(m);
  for (int i = 0; i < m; ++i) b_[i] = 0.5 * rng.gaussian();
  for (int i = 0; i < m; ++i) target_[i] = rng.gaussian();

  const Eigen::LLT<Matrix> llt(A_);
  jac_ = llt.solve(B_);
  ystar0_ = llt.solve(b_);
  Eigen::JacobiSVD<Matrix> svd(jac_);
  if (svd.singularValues().minCoeff() < 1e-8) {
    throw ConfigError("cauchy coupling must have full row rank");
  }

  SmoothnessConstants c;
  c.mu_g = lam.minCoeff();
  c.L_g = lam.maxCoeff();
  // d/du of u / (1 + u^2) lies in [-1/8, 1]; |u / (1 + u^2)| <= 1/2.
  c.L_fy = 1.0;
  c.C_fy = 0.5 * std::sqrt(static_cast<double>(m));
  c.C_fx = 0.0;
  c.C_gxy = spectral_norm(B_);
  c.f_star = 0.0;
  if (region_.bounded()) c.D_X = region_.diameter();
  constants_ = c;
}

double CauchyBilevel::f(const Vector&, const Vector& y) const {
  return 0.5 * (y - target_).array().square().log1p().sum();
}

double CauchyBilevel::g(const Vector& x, const Vector& y) const {
  return 0.5 * y.dot(A_ * y) - (B_ * x + b_).dot(y);
}

Vector CauchyBilevel::grad_x_f(const Vector&, const Vector&) const {
  return Vector::Zero(B_.cols());
}

Vector CauchyBilevel::grad_y_f(const Vector&, const Vector& y) const {
  const Eigen::ArrayXd u = (y - target_).array();
  return (u / (1.0 + u.square())).matrix();
}

Vector CauchyBilevel::grad_y_g(const Vector& x, const Vector& y) const {
  return A_ * y - B_ * x - b_;
}

Matrix CauchyBilevel::hess_xy_g(const Vector&, const Vector&) const { return -B_.transpose(); }

Matrix CauchyBilevel::hess_yy_g(const Vector&, const Vector&) const { return A_; }

Vector CauchyBilevel::ystar(const Vector& x) const { return jac_ * x + ystar0_; }

double CauchyBilevel::composed_value(const Vector& x) const { return f(x, ystar(x)); }

Vector CauchyBilevel::composed_gradient(const Vector& x) const {
  return jac_.transpose() * grad_y_f(x, ystar(x));
}

Vector CauchyBilevel::x_star(const FeasibleSet& X) const {
  const Vector free_min = jac_.completeOrthogonalDecomposition().solve(target_ - ystar0_);
  return X.project(free_min);
}

double CauchyBilevel::f_star(const FeasibleSet& X) const {
  const Vector xs = x_star(X);
  return X.bounded() ? composed_value(xs) : 0.0;
}

double CauchyBilevel::inner_radius(const Vector& y0, const FeasibleSet& X) const {
  const FeasibleSet& S = X.bounded() ? X : region_;
  return detail::max_affine_norm(-jac_, y0 - ystar0_, S);
}

}  // namespace bilevel
