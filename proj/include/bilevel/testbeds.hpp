#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "bilevel/constants.hpp"
#include "bilevel/feasible_set.hpp"
#include "bilevel/oracle.hpp"
#include "bilevel/problem.hpp"

namespace bilevel {

/// A bilevel problem with closed-form ground truth: y*(x), the composed
/// objective x -> f(x, y*(x)), its gradient, and the optimum over a set.
/// Constants are declared over `region()`.
class Testbed : public BilevelProblem {
 public:
  virtual std::string name() const = 0;
  virtual SmoothnessConstants constants() const = 0;
  virtual const FeasibleSet& region() const = 0;
  virtual ConvexityClass convexity() const = 0;

  virtual Vector ystar(const Vector& x) const = 0;
  virtual double composed_value(const Vector& x) const = 0;
  virtual Vector composed_gradient(const Vector& x) const = 0;
  virtual Vector x_star(const FeasibleSet& X) const = 0;
  virtual double f_star(const FeasibleSet& X) const { return composed_value(x_star(X)); }

  /// Upper bound on max_{x in X} ||y0 - y*(x)||, X replaced by region() when
  /// unbounded. +inf when both are unbounded.
  virtual double inner_radius(const Vector& y0, const FeasibleSet& X) const = 0;
};

/// g(x, y) = 1/2 y^T A y - (B x + b)^T y + 1/2 x^T R x,
/// f(x, y) = 1/2 x^T P x + p^T x + x^T S y + 1/2 y^T Q y + q^T y + c0.
/// Hence grad_y g = A y - B x - b, y*(x) = A^{-1}(B x + b),
/// hess_xy g = -B^T, dy*/dx = A^{-1} B.
class QuadraticBilevel : public Testbed {
 public:
  struct Data {
    Matrix A, B;
    Vector b;
    Matrix R;  ///< x-only part of g (affects g values only)
    Matrix P;
    Vector p;
    Matrix S;  ///< n x m cross term of f
    Matrix Q;
    Vector q;
    double c0 = 0.0;
  };

  QuadraticBilevel(std::string name, Data data, FeasibleSet region);

  /// f = 1/2 x^T P x + p^T x + 1/2 (y - y_d)^T Q (y - y_d).
  static Data standard_form(Matrix A, Matrix B, Vector b, Matrix P, Vector p, Matrix Q, Vector y_d);

  int dim_x() const override { return static_cast<int>(d_.B.cols()); }
  int dim_y() const override { return static_cast<int>(d_.A.rows()); }
  double f(const Vector& x, const Vector& y) const override;
  double g(const Vector& x, const Vector& y) const override;
  Vector grad_x_f(const Vector& x, const Vector& y) const override;
  Vector grad_y_f(const Vector& x, const Vector& y) const override;
  Vector grad_y_g(const Vector& x, const Vector& y) const override;
  Matrix hess_xy_g(const Vector& x, const Vector& y) const override;
  Matrix hess_yy_g(const Vector& x, const Vector& y) const override;

  std::string name() const override { return name_; }
  SmoothnessConstants constants() const override { return constants_; }
  const FeasibleSet& region() const override { return region_; }
  ConvexityClass convexity() const override;

  Vector ystar(const Vector& x) const override;
  double composed_value(const Vector& x) const override;
  Vector composed_gradient(const Vector& x) const override;
  Vector x_star(const FeasibleSet& X) const override;
  double inner_radius(const Vector& y0, const FeasibleSet& X) const override;

  const Data& data() const { return d_; }
  /// Hessian of the composed quadratic x -> f(x, y*(x)).
  const Matrix& composed_hessian() const { return composed_hessian_; }
  /// dy*/dx = A^{-1} B.
  const Matrix& ystar_jacobian() const { return jac_; }

 private:
  void compute_constants();

  std::string name_;
  Data d_;
  FeasibleSet region_;
  Matrix jac_;        // A^{-1} B
  Vector ystar0_;     // A^{-1} b
  Matrix composed_hessian_;
  Vector composed_linear_;
  double composed_const_ = 0.0;
  SmoothnessConstants constants_;
};

/// g = (y - x)^2, f = x^2 + y^2: y*(x) = x, f(x, y*(x)) = 2 x^2, x* = 0.
std::shared_ptr<QuadraticBilevel> make_scalar1d();

struct QuadraticSpectraSpec {
  std::vector<double> inner_spectrum;  ///< eigenvalues of A (length m)
  std::vector<double> outer_spectrum;  ///< eigenvalues of the composed Hessian (length n)
  /// Share of the composed Hessian routed through the inner solution
  /// (the rest sits in P). In [0, 1].
  double coupling_weight = 0.5;
  std::uint64_t seed = 1;
  /// Unconstrained minimizer of the composed objective; zero when empty.
  std::vector<double> x_star;
  FeasibleSet region;
};

/// Random rotations of the requested spectra. The composed Hessian has exactly
/// `outer_spectrum`; with m < n only m of its eigen-directions are coupled to
/// the inner problem.
std::shared_ptr<QuadraticBilevel> make_quadratic_from_spectra(const QuadraticSpectraSpec& spec);

struct StackelbergSpec {
  int leaders = 2;
  int followers = 3;
  double demand_intercept = 10.0;
  double demand_slope = 1.0;
  std::uint64_t seed = 1;
  FeasibleSet region;
};

/// Quantity competition with linear inverse demand
///   price = a - c (sum x + sum y),
/// firm objectives = negative profit with quadratic production costs.
/// Followers jointly minimize the sum of their negative profits.
std::shared_ptr<QuadraticBilevel> make_stackelberg(const StackelbergSpec& spec);

/// Ridge-regularized least squares tuned on a validation split:
///   g(lambda, theta) = (lambda / T) sum_i (a_i^T theta - b_i)^2 + ||theta||^2,
///   f(lambda, theta) = (1 / V) sum_j (c_j^T theta - d_j)^2,
/// lambda in [lambda_min, lambda_max].
class RidgeHyperTune : public Testbed {
 public:
  struct Spec {
    int train_rows = 40;
    int val_rows = 40;
    int features = 5;
    double lambda_min = 0.1;
    double lambda_max = 10.0;
    double noise = 0.5;
    std::uint64_t seed = 1;
  };

  explicit RidgeHyperTune(const Spec& spec);

  int dim_x() const override { return 1; }
  int dim_y() const override { return static_cast<int>(train_.cols()); }
  double f(const Vector& x, const Vector& y) const override;
  double g(const Vector& x, const Vector& y) const override;
  Vector grad_x_f(const Vector& x, const Vector& y) const override;
  Vector grad_y_f(const Vector& x, const Vector& y) const override;
  Vector grad_y_g(const Vector& x, const Vector& y) const override;
  Matrix hess_xy_g(const Vector& x, const Vector& y) const override;
  Matrix hess_yy_g(const Vector& x, const Vector& y) const override;

  std::string name() const override { return "ridge"; }
  SmoothnessConstants constants() const override { return constants_; }
  const FeasibleSet& region() const override { return region_; }
  ConvexityClass convexity() const override { return ConvexityClass::nonconvex; }

  Vector ystar(const Vector& x) const override;
  double composed_value(const Vector& x) const override;
  Vector composed_gradient(const Vector& x) const override;
  Vector x_star(const FeasibleSet& X) const override;
  double inner_radius(const Vector& y0, const FeasibleSet& X) const override;

  /// d theta / d lambda from the normal equations.
  Vector ystar_derivative(double lambda) const;

 private:
  void compute_constants();

  Spec spec_;
  Matrix train_;  // T x d
  Vector train_target_;
  Matrix val_;    // V x d
  Vector val_target_;
  Matrix gram_;   // A^T A / T
  Vector moment_; // A^T b / T
  FeasibleSet region_;
  SmoothnessConstants constants_;
};

/// Quadratic inner problem with a nonconvex, bounded-below outer objective
///   f(x, y) = 1/2 sum_j log(1 + (y_j - d_j)^2)
/// and g as in QuadraticBilevel. Requires m <= n and a full-row-rank coupling
/// so that y*(x) = d is attainable (f* = 0).
class CauchyBilevel : public Testbed {
 public:
  struct Spec {
    std::vector<double> inner_spectrum{1.0, 2.0};
    int dim_x = 3;
    double coupling_scale = 1.0;
    std::uint64_t seed = 1;
    /// Region over which M and D_X are reported; the objective's other
    /// constants hold globally.
    FeasibleSet region;
  };

  explicit CauchyBilevel(const Spec& spec);

  int dim_x() const override { return static_cast<int>(B_.cols()); }
  int dim_y() const override { return static_cast<int>(A_.rows()); }
  double f(const Vector& x, const Vector& y) const override;
  double g(const Vector& x, const Vector& y) const override;
  Vector grad_x_f(const Vector& x, const Vector& y) const override;
  Vector grad_y_f(const Vector& x, const Vector& y) const override;
  Vector grad_y_g(const Vector& x, const Vector& y) const override;
  Matrix hess_xy_g(const Vector& x, const Vector& y) const override;
  Matrix hess_yy_g(const Vector& x, const Vector& y) const override;

  std::string name() const override { return "cauchy"; }
  SmoothnessConstants constants() const override { return constants_; }
  const FeasibleSet& region() const override { return region_; }
  ConvexityClass convexity() const override { return ConvexityClass::nonconvex; }

  Vector ystar(const Vector& x) const override;
  double composed_value(const Vector& x) const override;
  Vector composed_gradient(const Vector& x) const override;
  /// A global minimizer over all space (y*(x) = d); projected otherwise.
  Vector x_star(const FeasibleSet& X) const override;
  double f_star(const FeasibleSet& X) const override;
  double inner_radius(const Vector& y0, const FeasibleSet& X) const override;

 private:
  Matrix A_, B_;
  Vector b_, target_;
  Matrix jac_;
  Vector ystar0_;
  FeasibleSet region_;
  SmoothnessConstants constants_;
};

/// Free-function forms of the ground-truth queries.
inline Vector analytic_ystar(const Testbed& t, const Vector& x) { return t.ystar(x); }
inline Vector analytic_grad_f(const Testbed& t, const Vector& x) { return t.composed_gradient(x); }
inline double analytic_f_star(const Testbed& t, const FeasibleSet& X) { return t.f_star(X); }

/// Oracle over a testbed with noise from `seed` (four derived streams).
BilevelOracle make_stochastic(std::shared_ptr<const Testbed> problem, const NoiseSpec& noise,
                              std::uint64_t seed);
BilevelOracle make_exact(std::shared_ptr<const Testbed> problem);

/// Random orthogonal n x n matrix (QR of a Gaussian matrix, deterministic in seed).
Matrix random_orthogonal(int n, std::uint64_t seed);
double spectral_norm(const Matrix& m);

}  // namespace bilevel
