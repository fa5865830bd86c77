#pragma once

#include "bilevel/feasible_set.hpp"
#include "bilevel/oracle.hpp"
#include "bilevel/schedule.hpp"
#include "bilevel/testbeds.hpp"
#include "bilevel/trace.hpp"

namespace bilevel {

struct AbaState {
  Vector x;
  Vector x_ag;
  Vector x_md;
  double theta = 1.0;
  double eta = 1.0;
  double lambda = 0.0;
};

/// eta_k = (theta (mu_f + lambda) - theta^2 mu_f) / (mu_f + lambda - theta^2 mu_f).
double aba_eta(double theta, double lambda, double mu_f);

/// argmin_{u in X} <d, u> + (a/2)||u - p||^2 + (b/2)||u - q||^2
///   = Proj_X((a p + b q - d) / (a + b)).
Vector two_point_prox(const FeasibleSet& set, const Vector& d, double a, const Vector& p, double b,
                      const Vector& q);

/// Accelerated bilevel approximation method. The inner loop runs at the
/// extrapolated point x^md_k; trace records refer to x^ag_k.
RunTrace aba_run(BilevelOracle& oracle, const FeasibleSet& set, const Vector& x0,
                 const Vector& y0, const AbaSchedule& sched, const Testbed* reference = nullptr);

}  // namespace bilevel
