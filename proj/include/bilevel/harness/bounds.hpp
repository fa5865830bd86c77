#pragma once

#include <string>
#include <vector>

#include "bilevel/constants.hpp"
#include "bilevel/oracle.hpp"

namespace bilevel::harness {

/// Run-specific quantities the rate bounds need besides the constants.
struct BoundInputs {
  std::string solver;  ///< ba | aba | bsa
  ConvexityClass convexity = ConvexityClass::convex;
  SmoothnessConstants constants;  ///< with M_init / D_X filled where known
  double initial_gap = 0.0;       ///< f(x0; y*(x0)) - f*
  double initial_dist = 0.0;      ///< ||x0 - x*||
  NoiseSpec noise;                ///< zero for deterministic solvers
  int dim_x = 1;
  int dim_y = 1;
};

/// Upper-bound values for k = 0..N. Entries are NaN where the bound is not
/// defined (k = 0 of a 1/N bound, or k < N for bounds whose schedule depends
/// on N).
struct BoundCurve {
  std::string formula_id;
  bool available = false;
  std::vector<double> values;
  std::vector<std::string> warnings;
};

BoundCurve bound_curve(const BoundInputs& in, int N);

/// Variance proxy of the stochastic hypergradient used by the stochastic bounds.
double hypergradient_variance_bound(const BoundInputs& in);

}  // namespace bilevel::harness
