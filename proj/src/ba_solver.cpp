#include "bilevel/ba_solver.hpp"

#include <limits>

#include "bilevel/hypergrad.hpp"
#include "bilevel/inner_loop.hpp"
#include "bilevel/rng.hpp"
#include "solver_common.hpp"

namespace bilevel {

RunTrace ba_run(BilevelOracle& oracle, const FeasibleSet& set, const Vector& x0, const Vector& y0,
                const ScheduleSpec& sched, const Testbed* reference) {
  const int N = sched.N;
  detail::check_start(set, x0, oracle.dim_x(), y0, oracle.dim_y());
  detail::check_length(sched.alpha, N, "alpha");
  detail::check_length(sched.inner_steps, N, "inner_steps");
  const bool nonconvex = sched.convexity == ConvexityClass::nonconvex;

  RunTrace trace;
  if (reference) trace.f_star = reference->f_star(set);
  const double f_star = trace.f_star.value_or(0.0);
  if (nonconvex && N > 0) {
    RngStream index("output_index", sched.index_seed);
    trace.output_index = static_cast<int>(index.uniform_index(static_cast<std::size_t>(N)));
  }

  detail::Stopwatch clock;
  Vector x = x0;
  Vector y = y0;
  Vector sum_x = Vector::Zero(x0.size());
  Vector x_r = x0;
  double grad_sq_sum = 0.0;
  trace.records.reserve(static_cast<std::size_t>(N));

  for (int k = 0; k < N; ++k) try {
    const auto ks = static_cast<std::size_t>(k);
    const InnerRunResult inner = gd_inner(oracle, x, sched.cold_start ? y0 : y, sched.inner_steps[ks]);
    y = inner.y_final;
    const HypergradResult hg = hypergradient(oracle, x, y);

    TraceRecord rec;
    rec.inner_error = reference ? (y - reference->ystar(x)).norm() : 0.0;
    const double grad_here =
        reference ? reference->composed_gradient(x).squaredNorm() : hg.grad.squaredNorm();
    grad_sq_sum += grad_here;
    if (trace.output_index && *trace.output_index == k) x_r = x;
    const double f_here = oracle.problem().f(x, y);

    x = set.project(x - sched.alpha[ks] * hg.grad);
    sum_x += x;

    rec.k = k + 1;
    rec.x = x;
    switch (sched.convexity) {
      case ConvexityClass::strongly_convex:
        rec.x_output = x;
        break;
      case ConvexityClass::convex:
        rec.x_output = sum_x / (k + 1);
        break;
      case ConvexityClass::nonconvex:
        rec.x_output = x;
        break;
    }
    detail::fill_metrics(rec, reference, f_star, x, f_here);
    if (nonconvex) {
      rec.grad_norm_sq = grad_sq_sum / (k + 1);
    } else {
      rec.grad_norm_sq = reference ? reference->composed_gradient(rec.x_output).squaredNorm()
                                   : hg.grad.squaredNorm();
    }
    rec.counters = oracle.counters();
    rec.wall_ms = clock.elapsed_ms();
    detail::check_finite(rec, y);
    trace.records.push_back(std::move(rec));
  } catch (const NumericalError& e) {
    throw RunFailure(e.what(), trace);
  }

  trace.x_last = x;
  trace.x_average = N > 0 ? Vector(sum_x / N) : x0;
  switch (sched.convexity) {
    case ConvexityClass::strongly_convex:
      trace.x_output = trace.x_last;
      break;
    case ConvexityClass::convex:
      trace.x_output = trace.x_average;
      break;
    case ConvexityClass::nonconvex:
      trace.x_output = x_r;
      break;
  }
  if (!reference) apply_surrogate_gap(trace);
  return trace;
}

}  // namespace bilevel
