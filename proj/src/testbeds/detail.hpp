#pragma once

#include <functional>

#include "bilevel/feasible_set.hpp"

namespace bilevel::detail {

/// max over x in X of ||K x + c||. Exact on boxes (vertex enumeration, n <= 16)
/// and balls up to the triangle inequality; +inf on all space unless K = 0.
double max_affine_norm(const Matrix& K, const Vector& c, const FeasibleSet& X);

/// Local minimizer of 1/2 x^T H x + l^T x over X by accelerated projected
/// gradient from `start`.
Vector projected_quadratic_min(const Matrix& H, const Vector& l, const FeasibleSet& X,
                               const Vector& start);

/// Minimizer of a smooth scalar function on [lo, hi]: dense log grid, then
/// golden-section refinement around the best grid point.
double minimize_interval(const std::function<double(double)>& fn, double lo, double hi);

double min_eigenvalue(const Matrix& symmetric);
double max_eigenvalue(const Matrix& symmetric);

/// 0 * inf = 0 for constants that only enter through a vanishing factor.
inline double guarded_product(double a, double b) { return (a == 0.0 || b == 0.0) ? 0.0 : a * b; }

}  // namespace bilevel::detail
