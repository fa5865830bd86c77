#include "bilevel/aba_solver.hpp"

#include "bilevel/hypergrad.hpp"
#include "bilevel/inner_loop.hpp"
#include "solver_common.hpp"

namespace bilevel {

double aba_eta(double theta, double lambda, double mu_f) {
  const double den = mu_f + lambda - theta * theta * mu_f;
  if (den == 0.0) return theta;
  return (theta * (mu_f + lambda) - theta * theta * mu_f) / den;
}

Vector two_point_prox(const FeasibleSet& set, const Vector& d, double a, const Vector& p, double b,
                      const Vector& q) {
  if (!(a + b > 0.0)) throw ConfigError("prox weights must have a positive sum");
  return set.project((a * p + b * q - d) / (a + b));
}

RunTrace aba_run(BilevelOracle& oracle, const FeasibleSet& set, const Vector& x0,
                 const Vector& y0, const AbaSchedule& sched, const Testbed* reference) {
  const int N = sched.N;
  detail::check_start(set, x0, oracle.dim_x(), y0, oracle.dim_y());
  detail::check_length(sched.alpha, N, "alpha");
  detail::check_length(sched.inner_steps, N, "inner_steps");
  detail::check_length(sched.theta, N, "theta");
  detail::check_length(sched.lambda, N, "lambda");
  if (sched.convexity == ConvexityClass::nonconvex) {
    throw ConfigError("the accelerated method has no nonconvex preset");
  }

  RunTrace trace;
  if (reference) trace.f_star = reference->f_star(set);
  const double f_star = trace.f_star.value_or(0.0);
  const double mu = sched.mu_f;

  detail::Stopwatch clock;
  AbaState s{x0, x0, x0, 1.0, 1.0, 0.0};
  Vector y = y0;
  Vector sum_ag = Vector::Zero(x0.size());
  trace.records.reserve(static_cast<std::size_t>(N));

  for (int k = 0; k < N; ++k) try {
    const auto ks = static_cast<std::size_t>(k);
    s.theta = sched.theta[ks];
    s.lambda = sched.lambda[ks];
    s.eta = aba_eta(s.theta, s.lambda, mu);
    s.x_md = s.eta * s.x + (1.0 - s.eta) * s.x_ag;

    const InnerRunResult inner =
        gd_inner(oracle, s.x_md, sched.cold_start ? y0 : y, sched.inner_steps[ks]);
    y = inner.y_final;
    const HypergradResult hg = hypergradient(oracle, s.x_md, y);

    TraceRecord rec;
    rec.inner_error = reference ? (y - reference->ystar(s.x_md)).norm() : 0.0;
    const double f_here = oracle.problem().f(s.x_md, y);

    const double a = mu / 2.0;
    const double b = ((1.0 - s.theta) * mu + s.lambda) / (2.0 * s.theta);
    const Vector x_next = two_point_prox(set, hg.grad, a, s.x_md, b, s.x);
    s.x_ag = set.project(s.x_md - sched.alpha[ks] * hg.grad);
    s.x = x_next;
    sum_ag += s.x_ag;

    rec.k = k + 1;
    rec.x = s.x_ag;
    rec.x_output = s.x_ag;
    detail::fill_metrics(rec, reference, f_star, s.x_ag, f_here);
    rec.grad_norm_sq = reference ? reference->composed_gradient(s.x_ag).squaredNorm()
                                 : hg.grad.squaredNorm();
    rec.counters = oracle.counters();
    rec.wall_ms = clock.elapsed_ms();
    detail::check_finite(rec, y);
    trace.records.push_back(std::move(rec));
  } catch (const NumericalError& e) {
    throw RunFailure(e.what(), trace);
  }

  trace.x_last = s.x_ag;
  trace.x_average = N > 0 ? Vector(sum_ag / N) : x0;
  trace.x_output = s.x_ag;
  if (!reference) apply_surrogate_gap(trace);
  return trace;
}

}  // namespace bilevel
