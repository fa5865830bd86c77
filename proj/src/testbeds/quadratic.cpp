#include <algorithm>
#include <cmath>
#include <limits>

#include "bilevel/rng.hpp"
#include "bilevel/testbeds.hpp"
#include "detail.hpp"

namespace bilevel {

namespace {

Matrix or_zero(const Matrix& m, Eigen::Index rows, Eigen::Index cols) {
  return m.size() == 0 ? Matrix::Zero(rows, cols) : m;
}

Vector or_zero(const Vector& v, Eigen::Index n) { return v.size() == 0 ? Vector::Zero(n) : v; }

void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ConfigError(std::string("QuadraticBilevel: ") + what + " has the wrong shape");
  }
}

}  // namespace

QuadraticBilevel::Data QuadraticBilevel::standard_form(Matrix A, Matrix B, Vector b, Matrix P,
                                                       Vector p, Matrix Q, Vector y_d) {
  Data d;
  d.A = std::move(A);
  d.B = std::move(B);
  d.b = std::move(b);
  d.P = std::move(P);
  d.p = std::move(p);
  d.q = -(Q * y_d);
  d.c0 = 0.5 * y_d.dot(Q * y_d);
  d.Q = std::move(Q);
  return d;
}

QuadraticBilevel::QuadraticBilevel(std::string name, Data data, FeasibleSet region)
    : name_(std::move(name)), d_(std::move(data)), region_(std::move(region)) {
  const Eigen::Index m = d_.A.rows();
  const Eigen::Index n = d_.B.cols();
  if (m == 0 || n == 0) throw ConfigError("QuadraticBilevel needs n, m >= 1");
  require_shape(d_.A, m, m, "A");
  require_shape(d_.B, m, n, "B");
  d_.b = or_zero(d_.b, m);
  d_.R = or_zero(d_.R, n, n);
  d_.P = or_zero(d_.P, n, n);
  d_.p = or_zero(d_.p, n);
  d_.S = or_zero(d_.S, n, m);
  d_.Q = or_zero(d_.Q, m, m);
  d_.q = or_zero(d_.q, m);
  require_shape(d_.b, m, 1, "b");
  require_shape(d_.R, n, n, "R");
  require_shape(d_.P, n, n, "P");
  require_shape(d_.p, n, 1, "p");
  require_shape(d_.S, n, m, "S");
  require_shape(d_.Q, m, m, "Q");
  require_shape(d_.q, m, 1, "q");
  if ((d_.A - d_.A.transpose()).norm() > 1e-12 * (1.0 + d_.A.norm())) {
    throw ConfigError("QuadraticBilevel: A must be symmetric");
  }
  if (region_.kind() != FeasibleSet::Kind::all_space) {
    const Eigen::Index rn = region_.kind() == FeasibleSet::Kind::box
                                ? region_.as_box().lower.size()
                                : region_.as_ball().center.size();
    if (rn != n) throw ConfigError("QuadraticBilevel: region dimension differs from n");
  }

  Eigen::LLT<Matrix> llt(d_.A);
  if (llt.info() != Eigen::Success || detail::min_eigenvalue(d_.A) <= 0.0) {
    throw ConfigError("QuadraticBilevel: A must be positive definite");
  }
  jac_ = llt.solve(d_.B);
  ystar0_ = llt.solve(d_.b);

  const Matrix SJ = d_.S * jac_;
  composed_hessian_ = d_.P + SJ + SJ.transpose() + jac_.transpose() * d_.Q * jac_;
  composed_hessian_ = 0.5 * (composed_hessian_ + composed_hessian_.transpose());
  composed_linear_ = d_.p + d_.S * ystar0_ + jac_.transpose() * (d_.Q * ystar0_ + d_.q);
  composed_const_ = 0.5 * ystar0_.dot(d_.Q * ystar0_) + d_.q.dot(ystar0_) + d_.c0;
  compute_constants();
}

double QuadraticBilevel::f(const Vector& x, const Vector& y) const {
  return 0.5 * x.dot(d_.P * x) + d_.p.dot(x) + x.dot(d_.S * y) + 0.5 * y.dot(d_.Q * y) +
         d_.q.dot(y) + d_.c0;
}

double QuadraticBilevel::g(const Vector& x, const Vector& y) const {
  return 0.5 * y.dot(d_.A * y) - (d_.B * x + d_.b).dot(y) + 0.5 * x.dot(d_.R * x);
}

Vector QuadraticBilevel::grad_x_f(const Vector& x, const Vector& y) const {
  return d_.P * x + d_.p + d_.S * y;
}

Vector QuadraticBilevel::grad_y_f(const Vector& x, const Vector& y) const {
  return d_.S.transpose() * x + d_.Q * y + d_.q;
}

Vector QuadraticBilevel::grad_y_g(const Vector& x, const Vector& y) const {
  return d_.A * y - d_.B * x - d_.b;
}

Matrix QuadraticBilevel::hess_xy_g(const Vector&, const Vector&) const { return -d_.B.transpose(); }

Matrix QuadraticBilevel::hess_yy_g(const Vector&, const Vector&) const { return d_.A; }

ConvexityClass QuadraticBilevel::convexity() const {
  const double lo = detail::min_eigenvalue(composed_hessian_);
  const double tol = 1e-12 * (1.0 + detail::max_eigenvalue(composed_hessian_));
  if (lo > tol) return ConvexityClass::strongly_convex;
  if (lo >= -tol) return ConvexityClass::convex;
  return ConvexityClass::nonconvex;
}

Vector QuadraticBilevel::ystar(const Vector& x) const { return jac_ * x + ystar0_; }

double QuadraticBilevel::composed_value(const Vector& x) const {
  return 0.5 * x.dot(composed_hessian_ * x) + composed_linear_.dot(x) + composed_const_;
}

Vector QuadraticBilevel::composed_gradient(const Vector& x) const {
  return composed_hessian_ * x + composed_linear_;
}

Vector QuadraticBilevel::x_star(const FeasibleSet& X) const {
  const auto cls = convexity();
  if (cls != ConvexityClass::nonconvex) {
    const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(composed_hessian_);
    const Vector free_min = cod.solve(-composed_linear_);
    const double residual = (composed_hessian_ * free_min + composed_linear_).norm();
    const bool attained = residual <= 1e-9 * (1.0 + composed_linear_.norm());
    if (attained && X.contains(free_min, 1e-12)) return free_min;
    if (!X.bounded()) {
      if (!attained) throw ConfigError(name_ + ": composed objective is unbounded below");
      return free_min;
    }
    return detail::projected_quadratic_min(composed_hessian_, composed_linear_, X,
                                           attained ? free_min : Vector::Zero(dim_x()));
  }
  if (!X.bounded()) throw ConfigError(name_ + ": nonconvex composed quadratic has no minimizer");
  // Indefinite case: best local solution over multiple starts.
  std::vector<Vector> starts = X.box_vertices();
  starts.push_back(X.project(Vector::Zero(dim_x())));
  Vector best = starts.front();
  double best_val = std::numeric_limits<double>::infinity();
  for (const Vector& s : starts) {
    const Vector cand = detail::projected_quadratic_min(composed_hessian_, composed_linear_, X, s);
    const double v = composed_value(cand);
    if (v < best_val) {
      best_val = v;
      best = cand;
    }
  }
  return best;
}

double QuadraticBilevel::inner_radius(const Vector& y0, const FeasibleSet& X) const {
  const FeasibleSet& S = X.bounded() ? X : region_;
  return detail::max_affine_norm(-jac_, y0 - ystar0_, S);
}

void QuadraticBilevel::compute_constants() {
  SmoothnessConstants c;
  c.mu_g = detail::min_eigenvalue(d_.A);
  c.L_g = detail::max_eigenvalue(d_.A);
  c.mu_f = std::max(0.0, detail::min_eigenvalue(composed_hessian_));
  c.L_fx = spectral_norm(d_.S);
  c.L_fy = spectral_norm(d_.Q);
  c.Lbar_fy = c.L_fx;
  c.Lbar_fx = spectral_norm(d_.P);
  c.C_gxy = spectral_norm(d_.B);

  // Norm bounds on grad f hold over region x {y : ||y - y*(x)|| <= r_y}.
  const double r_y = 1.0 + detail::max_affine_norm(jac_, ystar0_, region_);
  const Matrix gy_lin = d_.S.transpose() + d_.Q * jac_;
  const Vector gy_off = d_.Q * ystar0_ + d_.q;
  c.C_fy = detail::max_affine_norm(gy_lin, gy_off, region_) +
           detail::guarded_product(c.L_fy, r_y);
  const Matrix gx_lin = d_.P + d_.S * jac_;
  const Vector gx_off = d_.p + d_.S * ystar0_;
  c.C_fx = detail::max_affine_norm(gx_lin, gx_off, region_) +
           detail::guarded_product(c.L_fx, r_y);
  if (region_.bounded()) c.D_X = region_.diameter();
  constants_ = c;
}

std::shared_ptr<QuadraticBilevel> make_scalar1d() {
  QuadraticBilevel::Data d;
  d.A = Matrix::Constant(1, 1, 2.0);
  d.B = Matrix::Constant(1, 1, 2.0);
  d.b = Vector::Zero(1);
  d.R = Matrix::Constant(1, 1, 2.0);
  d.P = Matrix::Constant(1, 1, 2.0);
  d.Q = Matrix::Constant(1, 1, 2.0);
  return std::make_shared<QuadraticBilevel>("scalar1d", d, FeasibleSet::all_space());
}

std::shared_ptr<QuadraticBilevel> make_quadratic_from_spectra(const QuadraticSpectraSpec& spec) {
  const int m = static_cast<int>(spec.inner_spectrum.size());
  const int n = static_cast<int>(spec.outer_spectrum.size());
  if (m == 0 || n == 0) throw ConfigError("spectra must be nonempty");
  for (double e : spec.inner_spectrum) {
    if (!(e > 0.0)) throw ConfigError("inner spectrum must be positive");
  }
  for (double e : spec.outer_spectrum) {
    if (!(e >= 0.0)) throw ConfigError("outer spectrum must be nonnegative");
  }
  if (!(spec.coupling_weight >= 0.0 && spec.coupling_weight <= 1.0)) {
    throw ConfigError("coupling_weight must lie in [0, 1]");
  }
  if (!spec.x_star.empty() && static_cast<int>(spec.x_star.size()) != n) {
    throw ConfigError("x_star length must equal the outer dimension");
  }

  const Matrix U = random_orthogonal(m, derive_seed(spec.seed, "inner_basis"));
  const Matrix V = random_orthogonal(n, derive_seed(spec.seed, "outer_basis"));
  const Matrix Z = random_orthogonal(m, derive_seed(spec.seed, "coupling_basis"));
  const Vector lam_in = Eigen::Map<const Vector>(spec.inner_spectrum.data(), m);
  const Vector lam_out = Eigen::Map<const Vector>(spec.outer_spectrum.data(), n);

  const Matrix A = U * lam_in.asDiagonal() * U.transpose();
  const Matrix H = V * lam_out.asDiagonal() * V.transpose();
  const double w = spec.coupling_weight;

  // J = A^{-1} B with J^T J = w H on the first min(m, n) eigen-directions.
  const int r = std::min(m, n);
  Matrix core = Matrix::Zero(m, n);
  for (int i = 0; i < r; ++i) core(i, i) = std::sqrt(w * lam_out[i]);
  const Matrix J = Z * core * V.transpose();
  const Matrix B = A * J;

  RngStream rng("offsets", derive_seed(spec.seed, "offsets"));
  Vector b(m);
  for (int i = 0; i < m; ++i) b[i] = 0.5 * rng.gaussian();

  Matrix P = (1.0 - w) * H;
  if (m < n) {
    Matrix rest = Matrix::Zero(n, n);
    for (int i = r; i < n; ++i) rest += w * lam_out[i] * V.col(i) * V.col(i).transpose();
    P += rest;
  }
  P = 0.5 * (P + P.transpose());

  Vector xs = Vector::Zero(n);
  if (!spec.x_star.empty()) xs = Eigen::Map<const Vector>(spec.x_star.data(), n);
  const Vector y0 = A.llt().solve(b);
  // Composed gradient H x + p + J^T y0 (Q = I, y_d = 0) vanishes at x_star.
  const Matrix Hc = P + J.transpose() * J;
  const Vector p = -(Hc * xs) - J.transpose() * y0;

  auto data = QuadraticBilevel::standard_form(A, B, b, P, p, Matrix::Identity(m, m),
                                              Vector::Zero(m));
  return std::make_shared<QuadraticBilevel>("quadratic", data, spec.region);
}

std::shared_ptr<QuadraticBilevel> make_stackelberg(const StackelbergSpec& spec) {
  const int n = spec.leaders;
  const int m = spec.followers;
  if (n < 1 || m < 1) throw ConfigError("stackelberg needs at least one leader and follower");
  if (!(spec.demand_slope > 0.0)) throw ConfigError("demand slope must be positive");
  const double a = spec.demand_intercept;
  const double c = spec.demand_slope;
  RngStream rng("costs", derive_seed(spec.seed, "costs"));
  auto cost = [&]() { return 1.0 + static_cast<double>(rng.uniform_index(1001)) / 1000.0; };

  QuadraticBilevel::Data d;
  Vector kf(m), kl(n);
  for (int j = 0; j < m; ++j) kf[j] = cost();
  for (int i = 0; i < n; ++i) kl[i] = cost();
  // Followers: sum_j -y_j (a - c (1^T x + 1^T y)) + 1/2 kf_j y_j^2.
  d.A = 2.0 * c * Matrix::Ones(m, m) + Matrix(kf.asDiagonal());
  d.B = -c * Matrix::Ones(m, n);
  d.b = Vector::Constant(m, a);
  // Leaders: sum_i -x_i (a - c (1^T x + 1^T y)) + 1/2 kl_i x_i^2.
  d.P = 2.0 * c * Matrix::Ones(n, n) + Matrix(kl.asDiagonal());
  d.p = Vector::Constant(n, -a);
  d.S = c * Matrix::Ones(n, m);
  d.Q = Matrix::Zero(m, m);
  d.q = Vector::Zero(m);
  return std::make_shared<QuadraticBilevel>("stackelberg", d, spec.region);
}

}  // namespace bilevel
