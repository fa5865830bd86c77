#pragma once

#include "bilevel/types.hpp"

namespace bilevel {

/// Exact evaluators of a bilevel problem
///
///   min_{x in X} f(x, y*(x)),   y*(x) = argmin_y g(x, y).
///
/// `hess_xy_g` is the n x m matrix d/dx (grad_y g)^T; `hess_yy_g` is m x m.
class BilevelProblem {
 public:
  virtual ~BilevelProblem() = default;

  virtual int dim_x() const = 0;
  virtual int dim_y() const = 0;

  virtual double f(const Vector& x, const Vector& y) const = 0;
  virtual double g(const Vector& x, const Vector& y) const = 0;
  virtual Vector grad_x_f(const Vector& x, const Vector& y) const = 0;
  virtual Vector grad_y_f(const Vector& x, const Vector& y) const = 0;
  virtual Vector grad_y_g(const Vector& x, const Vector& y) const = 0;
  virtual Matrix hess_xy_g(const Vector& x, const Vector& y) const = 0;
  virtual Matrix hess_yy_g(const Vector& x, const Vector& y) const = 0;
};

}  // namespace bilevel
