#include "bilevel/verify/reference.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

namespace bilevel::verify {

namespace {

double step_for(double xi) {
  return std::cbrt(std::numeric_limits<double>::epsilon()) * (1.0 + std::abs(xi));
}

}  // namespace

Vector fd_gradient(const std::function<double(const Vector&)>& fn, const Vector& x) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = step_for(x[i]);
    Vector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (fn(xp) - fn(xm)) / (xp[i] - xm[i]);
  }
  return g;
}

Matrix fd_jacobian(const std::function<Vector(const Vector&)>& fn, const Vector& x) {
  const Vector f0 = fn(x);
  Matrix J(f0.size(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = step_for(x[i]);
    Vector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    J.col(i) = (fn(xp) - fn(xm)) / (xp[i] - xm[i]);
  }
  return J;
}

Vector newton_ystar(const BilevelProblem& p, const Vector& x, Vector y, int max_iter) {
  for (int it = 0; it < max_iter; ++it) {
    const Vector r = p.grad_y_g(x, y);
    const Vector step = p.hess_yy_g(x, y).ldlt().solve(r);
    y -= step;
    if (step.norm() <= 1e-15 * (1.0 + y.norm())) break;
  }
  return y;
}

double reference_composed_value(const BilevelProblem& p, const Vector& x, const Vector& y_guess) {
  return p.f(x, newton_ystar(p, x, y_guess));
}

Matrix hia_expectation_closed_form(const Matrix& H, double L, int b) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(H);
  Vector d(H.rows());
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const double l = es.eigenvalues()[i];
    d[i] = (1.0 - std::pow(1.0 - l / L, b)) / l;
  }
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

double hia_bias_closed_form(double mu, double L, int b) {
  const double Q = L / mu;
  return std::pow((Q - 1.0) / Q, b) / mu;
}

ReferenceConstants reference_constants(double mu_g, double L_fx, double L_fy, double Lbar_fx,
                                       double Lbar_fy, double C_fy, double L_gxy, double L_gyy,
                                       double Lbar_gxy, double Lbar_gyy, double C_gxy) {
  // 0 * inf counts as 0: a term whose Lipschitz factor vanishes does not
  // depend on the (possibly unbounded) norm bound it multiplies.
  auto mul = [](double a, double b) { return (a == 0.0 || b == 0.0) ? 0.0 : a * b; };
  ReferenceConstants r;
  r.C = L_fx + L_fy * C_gxy / mu_g + mul(C_fy, L_gxy / mu_g + L_gyy * C_gxy / (mu_g * mu_g));
  r.L_f = Lbar_fx + (Lbar_fy + r.C) * C_gxy / mu_g +
          mul(C_fy, Lbar_gxy / mu_g + Lbar_gyy * C_gxy / (mu_g * mu_g));
  return r;
}

std::pair<double, double> loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    syy += ly * ly;
  }
  const double vx = sxx - sx * sx / n;
  const double vy = syy - sy * sy / n;
  const double cxy = sxy - sx * sy / n;
  const double slope = cxy / vx;
  const double r2 = vy <= 0.0 ? 1.0 : (cxy * cxy) / (vx * vy);
  return {slope, r2};
}

double spectral_norm_sym(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace bilevel::verify
