#pragma once

#include <functional>
#include <vector>

#include "bilevel/problem.hpp"
#include "bilevel/types.hpp"

namespace bilevel::verify {

/// Central differences with h_i = eps^{1/3} (1 + |x_i|).
Vector fd_gradient(const std::function<double(const Vector&)>& fn, const Vector& x);

/// Central-difference Jacobian of a vector map (rows = outputs).
Matrix fd_jacobian(const std::function<Vector(const Vector&)>& fn, const Vector& x);

/// Inner solution by Newton's method on grad_y g, using only the problem's
/// own gradient and Hessian evaluators.
Vector newton_ystar(const BilevelProblem& p, const Vector& x, Vector y, int max_iter = 50);

/// x -> f(x, newton_ystar(x)).
double reference_composed_value(const BilevelProblem& p, const Vector& x, const Vector& y_guess);

/// Closed-form expectation of the truncated Neumann estimator,
///   E = V diag((1 / l_i) (1 - (1 - l_i / L)^b)) V^T,
/// for a fixed symmetric H with eigenpairs (l_i, V).
Matrix hia_expectation_closed_form(const Matrix& H, double L, int b);

/// (1 / mu) ((Q - 1) / Q)^b with Q = L / mu.
double hia_bias_closed_form(double mu, double L, int b);

struct ReferenceConstants {
  double C = 0.0;
  double L_f = 0.0;
};

/// Hypergradient-error and composed-smoothness constants, written out term by
/// term from the individual Lipschitz and norm bounds.
ReferenceConstants reference_constants(double mu_g, double L_fx, double L_fy, double Lbar_fx,
                                       double Lbar_fy, double C_fy, double L_gxy, double L_gyy,
                                       double Lbar_gxy, double Lbar_gyy, double C_gxy);

/// Ordinary least squares of log(y) on log(x); returns {slope, r^2}.
std::pair<double, double> loglog_fit(const std::vector<double>& x, const std::vector<double>& y);

double spectral_norm_sym(const Matrix& m);

}  // namespace bilevel::verify
