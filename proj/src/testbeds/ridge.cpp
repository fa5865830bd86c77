#include <cmath>

#include "bilevel/rng.hpp"
#include "bilevel/testbeds.hpp"
#include "detail.hpp"

namespace bilevel {

RidgeHyperTune::RidgeHyperTune(const Spec& spec)
    : spec_(spec),
      region_(FeasibleSet::box(Vector::Constant(1, spec.lambda_min),
                               Vector::Constant(1, spec.lambda_max))) {
  if (!(spec.lambda_min > 0.0) || !(spec.lambda_max >= spec.lambda_min)) {
    throw ConfigError("ridge needs 0 < lambda_min <= lambda_max");
  }
  if (spec.train_rows < 1 || spec.val_rows < 1 || spec.features < 1) {
    throw ConfigError("ridge needs positive row and feature counts");
  }
  const int d = spec.features;
  RngStream rng("ridge_data", derive_seed(spec.seed, "ridge_data"));
  Vector truth(d);
  for (int j = 0; j < d; ++j) truth[j] = rng.gaussian();
  auto sample = [&](int rows, Matrix& feats, Vector& target) {
    feats.resize(rows, d);
    for (int j = 0; j < d; ++j) {
      for (int i = 0; i < rows; ++i) feats(i, j) = rng.gaussian();
    }
    target = feats * truth;
    for (int i = 0; i < rows; ++i) target[i] += spec.noise * rng.gaussian();
  };
  sample(spec.train_rows, train_, train_target_);
  sample(spec.val_rows, val_, val_target_);
  gram_ = train_.transpose() * train_ / spec.train_rows;
  moment_ = train_.transpose() * train_target_ / spec.train_rows;
  compute_constants();
}

double RidgeHyperTune::f(const Vector&, const Vector& y) const {
  return (val_ * y - val_target_).squaredNorm() / spec_.val_rows;
}

double RidgeHyperTune::g(const Vector& x, const Vector& y) const {
  return x[0] * (train_ * y - train_target_).squaredNorm() / spec_.train_rows + y.squaredNorm();
}

Vector RidgeHyperTune::grad_x_f(const Vector&, const Vector&) const { return Vector::Zero(1); }

Vector RidgeHyperTune::grad_y_f(const Vector&, const Vector& y) const {
  return (2.0 / spec_.val_rows) * (val_.transpose() * (val_ * y - val_target_));
}

Vector RidgeHyperTune::grad_y_g(const Vector& x, const Vector& y) const {
  return 2.0 * x[0] * (gram_ * y - moment_) + 2.0 * y;
}

Matrix RidgeHyperTune::hess_xy_g(const Vector&, const Vector& y) const {
  return 2.0 * (gram_ * y - moment_).transpose();
}

Matrix RidgeHyperTune::hess_yy_g(const Vector& x, const Vector&) const {
  const auto d = gram_.rows();
  return 2.0 * x[0] * gram_ + 2.0 * Matrix::Identity(d, d);
}

Vector RidgeHyperTune::ystar(const Vector& x) const {
  const auto d = gram_.rows();
  const Matrix K = x[0] * gram_ + Matrix::Identity(d, d);
  return K.llt().solve(x[0] * moment_);
}

Vector RidgeHyperTune::ystar_derivative(double lambda) const {
  const auto d = gram_.rows();
  const Matrix K = lambda * gram_ + Matrix::Identity(d, d);
  const Vector theta = K.llt().solve(lambda * moment_);
  return K.llt().solve(moment_ - gram_ * theta);
}

double RidgeHyperTune::composed_value(const Vector& x) const { return f(x, ystar(x)); }

Vector RidgeHyperTune::composed_gradient(const Vector& x) const {
  const Vector theta = ystar(x);
  return Vector::Constant(1, ystar_derivative(x[0]).dot(grad_y_f(x, theta)));
}

Vector RidgeHyperTune::x_star(const FeasibleSet& X) const {
  double lo = spec_.lambda_min;
  double hi = spec_.lambda_max;
  if (X.kind() == FeasibleSet::Kind::box) {
    lo = std::max(lo, X.as_box().lower[0]);
    hi = std::min(hi, X.as_box().upper[0]);
  } else if (X.kind() == FeasibleSet::Kind::ball) {
    lo = std::max(lo, X.as_ball().center[0] - X.as_ball().radius);
    hi = std::min(hi, X.as_ball().center[0] + X.as_ball().radius);
  }
  if (lo > hi) throw ConfigError("ridge feasible set misses the declared lambda range");
  const double best = detail::minimize_interval(
      [&](double l) { return composed_value(Vector::Constant(1, l)); }, lo, hi);
  return Vector::Constant(1, best);
}

double RidgeHyperTune::inner_radius(const Vector& y0, const FeasibleSet&) const {
  // theta*(lambda) grows componentwise (in the eigenbasis of the Gram matrix)
  // with lambda, so its largest norm sits at lambda_max.
  return y0.norm() + ystar(Vector::Constant(1, spec_.lambda_max)).norm();
}

void RidgeHyperTune::compute_constants() {
  const double g_norm = detail::max_eigenvalue(gram_);
  const double val_curv = 2.0 * detail::max_eigenvalue(val_.transpose() * val_) / spec_.val_rows;
  const double theta_max = ystar(Vector::Constant(1, spec_.lambda_max)).norm();
  const double r_y = 1.0 + theta_max;

  SmoothnessConstants c;
  c.mu_g = 2.0 + 2.0 * spec_.lambda_min * detail::min_eigenvalue(gram_);
  c.L_g = 2.0 + 2.0 * spec_.lambda_max * g_norm;
  c.mu_f = 0.0;
  c.L_fy = val_curv;
  c.C_fy = (2.0 / spec_.val_rows) * (val_.transpose() * val_target_).norm() +
           val_curv * (theta_max + r_y);
  c.C_fx = 0.0;
  c.L_gxy = 2.0 * g_norm;
  c.Lbar_gyy = 2.0 * g_norm;
  c.C_gxy = 2.0 * (g_norm * (theta_max + r_y) + moment_.norm());
  c.D_X = spec_.lambda_max - spec_.lambda_min;
  constants_ = c;
}

}  // namespace bilevel
