#pragma once

#include "bilevel/feasible_set.hpp"
#include "bilevel/oracle.hpp"
#include "bilevel/schedule.hpp"
#include "bilevel/testbeds.hpp"
#include "bilevel/trace.hpp"

namespace bilevel {

/// Bilevel approximation method: per outer step k, t_k gradient steps on the
/// inner problem at x_k, then a projected step along the approximate
/// hypergradient,
///   x_{k+1} = Proj_X(x_k - alpha_k * hypergradient(x_k, ybar_k)).
///
/// `reference`, when given, supplies exact gaps, gradients and inner errors
/// for the trace; it never influences the iterates.
RunTrace ba_run(BilevelOracle& oracle, const FeasibleSet& set, const Vector& x0, const Vector& y0,
                const ScheduleSpec& sched, const Testbed* reference = nullptr);

}  // namespace bilevel
