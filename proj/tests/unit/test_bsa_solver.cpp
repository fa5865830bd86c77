#include <doctest.h>

#include <cmath>

#include "bilevel/bsa_solver.hpp"
#include "bilevel/hia.hpp"
#include "bilevel/hypergrad.hpp"
#include "bilevel/testbeds.hpp"
#include "quad_helpers.hpp"

using namespace bilevel;
using namespace test_helpers;

TEST_CASE("zero noise, Hessian L_g I, b = 1: equals the deterministic hypergradient") {
  Matrix B(2, 1);
  B << 1.0, -0.5;
  auto q = quad(3.0 * Matrix::Identity(2, 2), B, vec({0.2, 0.1}), vec({1.0, -1.0}));
  BilevelOracle so = make_stochastic(q, NoiseSpec{}, 1);
  BilevelOracle eo = make_exact(q);
  RngStream r("hia_depth", 2);
  const Vector x = vec({0.4}), y = vec({0.3, -0.2});
  const auto s = stochastic_hypergradient(so, x, y, 1, r);
  CHECK((s.grad - hypergradient(eo, x, y).grad).norm() < 1e-14);
  CHECK(s.p_used == 0);
  CHECK(so.counters() == OracleCounters{1, 0, 1});
}

TEST_CASE("Scalar1D without noise: p >= 1 removes the correction term") {
  auto s1 = make_scalar1d();
  BilevelOracle o = make_stochastic(s1, NoiseSpec{}, 1);
  RngStream r("hia_depth", 5);
  const Vector x = vec({1.0}), y = vec({0.5});
  for (int i = 0; i < 30; ++i) {
    const auto s = stochastic_hypergradient(o, x, y, 6, r);
    if (s.p_used >= 1) {
      CHECK(s.grad[0] == doctest::Approx(2.0));
    } else {
      // (b / L) * 2y * 2 = 6 / 2 * 1 * 2 added to grad_x f = 2.
      CHECK(s.grad[0] == doctest::Approx(2.0 + 6.0));
    }
  }
}

TEST_CASE("Monte Carlo mean within 3 standard errors of the deterministic value plus bias") {
  QuadraticSpectraSpec spec;
  spec.inner_spectrum = {1.0, 2.0};
  spec.outer_spectrum = {1.0};
  auto q = make_quadratic_from_spectra(spec);
  NoiseSpec n;
  n.sigma_x = 0.1;
  n.sigma_y = 0.1;
  BilevelOracle o = make_stochastic(q, n, 3);
  BilevelOracle e = make_exact(q);
  RngStream r("hia_depth", 4);
  const Vector x = vec({0.5});
  const Vector y = q->ystar(x);
  const Vector exact = hypergradient(e, x, y).grad;
  const int draws = 10000, b = 8;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double g = stochastic_hypergradient(o, x, y, b, r).grad[0];
    sum += g;
    sum_sq += g * g;
  }
  const double mean = sum / draws;
  const double se = std::sqrt((sum_sq / draws - mean * mean) / (draws - 1));
  // Bias: |hess_xy g (H^{-1} - E[H_yy]) grad_y f| <= ||hess_xy|| * bias * ||grad_y f||.
  const double bias = e.hess_xy_g(x, y).norm() * hia_bias_bound(o.constants(), b) *
                      q->grad_y_f(x, y).norm();
  CHECK(std::abs(mean - exact[0]) <= 3 * se + bias);
}

TEST_CASE("zero noise on Scalar1D: deterministic trace, strictly decreasing gap") {
  auto s1 = make_scalar1d();
  const auto sched = bsa_schedule(ConvexityClass::strongly_convex, s1->constants(), 15);
  BilevelOracle a = make_stochastic(s1, NoiseSpec{}, 1);
  BilevelOracle b = make_stochastic(s1, NoiseSpec{}, 99);
  const auto ta = bsa_run(a, FeasibleSet::all_space(), vec({1.0}), vec({0.0}), sched, 1, s1.get());
  const auto tb = bsa_run(b, FeasibleSet::all_space(), vec({1.0}), vec({0.0}), sched, 2, s1.get());
  for (std::size_t i = 0; i < ta.records.size(); ++i) {
    CHECK(ta.records[i].x == tb.records[i].x);
    if (i > 0) CHECK(ta.records[i].f_gap < ta.records[i - 1].f_gap);
  }
}

TEST_CASE("without noise only the truncation index is random") {
  QuadraticSpectraSpec spec;
  spec.inner_spectrum = {1.0, 1.5};
  spec.outer_spectrum = {1.0, 2.0};
  spec.x_star = {0.3, 0.2};
  auto q = make_quadratic_from_spectra(spec);
  const Vector xs = q->x_star(FeasibleSet::all_space());
  BilevelOracle o1 = make_stochastic(q, NoiseSpec{}, 1);
  BilevelOracle o2 = make_stochastic(q, NoiseSpec{}, 1);
  BilevelOracle o3 = make_stochastic(q, NoiseSpec{}, 1);
  const auto sched = bsa_schedule(ConvexityClass::strongly_convex, o1.constants(), 200);
  const Vector x0 = vec({2.0, -1.0});
  const auto t1 = bsa_run(o1, FeasibleSet::all_space(), x0, Vector::Zero(2), sched, 3, q.get());
  const auto t2 = bsa_run(o2, FeasibleSet::all_space(), x0, Vector::Zero(2), sched, 3, q.get());
  const auto t3 = bsa_run(o3, FeasibleSet::all_space(), x0, Vector::Zero(2), sched, 4, q.get());
  CHECK(t1.x_last == t2.x_last);
  CHECK(t1.x_last != t3.x_last);
  CHECK((t1.x_last - xs).norm() < 0.1 * (x0 - xs).norm());
}

TEST_CASE("counter identities for N = 4 strongly convex") {
  QuadraticSpectraSpec spec;
  spec.inner_spectrum = {1.0, 2.0};
  spec.outer_spectrum = {1.0, 2.0};
  auto q = make_quadratic_from_spectra(spec);
  NoiseSpec n{0.1, 0.1, 0.1, 0.05, 0.05};
  BilevelOracle o = make_stochastic(q, n, 4);
  const auto sched = bsa_schedule(ConvexityClass::strongly_convex, o.constants(), 4);
  const auto tr = bsa_run(o, FeasibleSet::all_space(), vec({1.0, 1.0}), Vector::Zero(2), sched, 4,
                          q.get());
  CHECK(tr.records.back().counters.gc_g == 7);
  CHECK(tr.records.back().counters.gc_f == 4);
  std::int64_t hc = 0;
  for (const auto& r : tr.records) {
    CHECK(r.hia_depth >= 0);
    CHECK(r.hia_depth < sched.hia_terms[r.k - 1]);
    hc += 1 + r.hia_depth;
    CHECK(r.counters.hc_g == hc);
  }
}

TEST_CASE("weighted average recursion") {
  QuadraticSpectraSpec spec;
  spec.inner_spectrum = {1.0, 2.0};
  spec.outer_spectrum = {1.0, 2.0};
  auto q = make_quadratic_from_spectra(spec);
  NoiseSpec n{0.1, 0.1, 0.1, 0.0, 0.0};
  BilevelOracle o = make_stochastic(q, n, 7);
  const auto sched = bsa_schedule(ConvexityClass::strongly_convex, o.constants(), 10);
  const auto tr = bsa_run(o, FeasibleSet::all_space(), vec({1.0, 1.0}), Vector::Zero(2), sched, 7);
  Vector xh = tr.records[0].x;
  for (std::size_t k = 1; k < tr.records.size(); ++k) {
    const double g = sched.average_gamma[k];
    xh = (1 - g) * xh + g * tr.records[k].x;
    CHECK((tr.records[k].x_output - xh).norm() < 1e-13);
  }
  CHECK((*tr.x_weighted - xh).norm() < 1e-13);
}

TEST_CASE("ensembles run one oracle per seed and summarize them") {
  auto s1 = make_scalar1d();
  NoiseSpec n{0.2, 0.2, 0.2, 0.0, 0.0};
  auto sched = bsa_schedule(ConvexityClass::convex, s1->constants(), 20);
  sched.seeds = {1, 2, 3, 4};
  const auto ens = bsa_ensemble([&](std::uint64_t s) { return make_stochastic(s1, n, s); },
                                FeasibleSet::all_space(), vec({1.0}), vec({0.0}), sched, s1.get());
  REQUIRE(ens.runs.size() == 4);
  CHECK(ens.summary.runs == 4);
  double mean = 0.0;
  for (const auto& r : ens.runs) mean += r.records.back().f_gap / 4.0;
  CHECK(ens.summary.mean_f_gap.back() == doctest::Approx(mean));
  CHECK(ens.runs[0].records.back().x != ens.runs[1].records.back().x);
}
