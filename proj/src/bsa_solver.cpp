#include "bilevel/bsa_solver.hpp"

#include "bilevel/hia.hpp"
#include "bilevel/inner_loop.hpp"
#include "solver_common.hpp"

namespace bilevel {

StochasticHypergrad stochastic_hypergradient(BilevelOracle& oracle, const Vector& x,
                                             const Vector& ybar, int b, RngStream& truncation) {
  const auto outer = oracle.grad_f(x, ybar);
  const Matrix hxy = oracle.hess_xy_g(x, ybar);
  const HiaApplied h = hia_apply(oracle, x, ybar, b, outer.y, truncation);
  StochasticHypergrad out;
  out.grad = outer.x - hxy * h.value;
  out.p_used = h.p_drawn;
  out.b = b;
  out.xi_draws = 1;
  out.cross_draws = 1;
  out.hess_draws = h.p_drawn;
  return out;
}

RunTrace bsa_run(BilevelOracle& oracle, const FeasibleSet& set, const Vector& x0,
                 const Vector& y0, const BsaSchedule& sched, std::uint64_t seed,
                 const Testbed* reference) {
  const int N = sched.N;
  detail::check_start(set, x0, oracle.dim_x(), y0, oracle.dim_y());
  detail::check_length(sched.alpha, N, "alpha");
  detail::check_length(sched.inner_steps, N, "inner_steps");
  detail::check_length(sched.hia_terms, N, "hia_terms");
  const bool weighted = sched.averaging == Averaging::weighted_average;
  if (weighted) detail::check_length(sched.average_gamma, N, "average_gamma");
  if (weighted && N > 0 && sched.average_gamma[0] != 1.0) {
    throw ConfigError("weighted averaging needs gamma_0 = 1");
  }
  const bool nonconvex = sched.convexity == ConvexityClass::nonconvex;

  RunTrace trace;
  if (reference) trace.f_star = reference->f_star(set);
  const double f_star = trace.f_star.value_or(0.0);
  RngStream truncation = RngStream::derived(seed, "hia_depth");
  if (nonconvex && N > 0) {
    RngStream index = RngStream::derived(seed, "output_index");
    trace.output_index = static_cast<int>(index.uniform_index(static_cast<std::size_t>(N)));
  }

  detail::Stopwatch clock;
  Vector x = x0;
  Vector y = y0;
  Vector sum_x = Vector::Zero(x0.size());
  Vector x_hat = x0;
  Vector x_r = x0;
  double grad_sq_sum = 0.0;
  trace.records.reserve(static_cast<std::size_t>(N));

  for (int k = 0; k < N; ++k) try {
    const auto ks = static_cast<std::size_t>(k);
    const InnerRunResult inner =
        sgd_inner(oracle, x, sched.cold_start ? y0 : y, sched.inner_steps[ks]);
    y = inner.y_final;
    const StochasticHypergrad sg =
        stochastic_hypergradient(oracle, x, y, sched.hia_terms[ks], truncation);

    TraceRecord rec;
    rec.inner_error = reference ? (y - reference->ystar(x)).norm() : 0.0;
    rec.hia_depth = sg.p_used;
    grad_sq_sum += reference ? reference->composed_gradient(x).squaredNorm() : sg.grad.squaredNorm();
    if (trace.output_index && *trace.output_index == k) x_r = x;
    const double f_here = oracle.problem().f(x, y);

    x = set.project(x - sched.alpha[ks] * sg.grad);
    sum_x += x;
    if (weighted) {
      // x^_k = (1 - gamma_{k-1}) x^_{k-1} + gamma_{k-1} x_k, with gamma_0 = 1.
      const double g = sched.average_gamma[ks];
      x_hat = (1.0 - g) * x_hat + g * x;
    }

    rec.k = k + 1;
    rec.x = x;
    switch (sched.averaging) {
      case Averaging::weighted_average:
        rec.x_output = x_hat;
        break;
      case Averaging::uniform_average:
        rec.x_output = sum_x / (k + 1);
        break;
      case Averaging::last:
        rec.x_output = x;
        break;
    }
    detail::fill_metrics(rec, reference, f_star, x, f_here);
    if (nonconvex) {
      rec.grad_norm_sq = grad_sq_sum / (k + 1);
    } else {
      rec.grad_norm_sq = reference ? reference->composed_gradient(rec.x_output).squaredNorm()
                                   : sg.grad.squaredNorm();
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
  if (weighted) trace.x_weighted = x_hat;
  if (nonconvex) {
    trace.x_output = x_r;
  } else if (weighted) {
    trace.x_output = x_hat;
  } else if (sched.averaging == Averaging::uniform_average) {
    trace.x_output = trace.x_average;
  } else {
    trace.x_output = x;
  }
  if (!reference) apply_surrogate_gap(trace);
  return trace;
}

BsaEnsemble bsa_ensemble(const std::function<BilevelOracle(std::uint64_t)>& make_oracle,
                         const FeasibleSet& set, const Vector& x0, const Vector& y0,
                         const BsaSchedule& sched, const Testbed* reference) {
  if (sched.seeds.empty()) throw ConfigError("ensemble needs at least one seed");
  BsaEnsemble out;
  out.runs.reserve(sched.seeds.size());
  for (std::uint64_t seed : sched.seeds) {
    BilevelOracle oracle = make_oracle(seed);
    out.runs.push_back(bsa_run(oracle, set, x0, y0, sched, seed, reference));
  }
  out.summary = summarize_ensemble(out.runs);
  return out;
}

}  // namespace bilevel
