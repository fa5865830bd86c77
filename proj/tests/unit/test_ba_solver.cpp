#include <doctest.h>

#include <cmath>

#include "bilevel/ba_solver.hpp"
#include "bilevel/testbeds.hpp"
#include "quad_helpers.hpp"

using namespace bilevel;
using namespace test_helpers;

TEST_CASE("Scalar1D strongly convex: x_k = (2/3)^k and gap 2 (2/3)^{2k}") {
  auto s = make_scalar1d();
  BilevelOracle o = make_exact(s);
  const auto sched = ba_schedule(ConvexityClass::strongly_convex, s->constants(), 20);
  const auto tr = ba_run(o, FeasibleSet::all_space(), vec({1.0}), vec({0.0}), sched, s.get());
  REQUIRE(tr.records.size() == 20);
  for (const auto& r : tr.records) {
    CHECK(r.x[0] == doctest::Approx(std::pow(2.0 / 3.0, r.k)).epsilon(1e-13));
    CHECK(r.f_gap == doctest::Approx(2.0 * std::pow(2.0 / 3.0, 2 * r.k)).epsilon(1e-12));
    CHECK(r.inner_error == doctest::Approx(0.0).epsilon(1e-15));
  }
  CHECK(tr.x_output == tr.x_last);
}

TEST_CASE("N = 3 strongly convex preset uses 1 + 2 + 3 inner gradients") {
  auto s = make_scalar1d();
  BilevelOracle o = make_exact(s);
  const auto sched = ba_schedule(ConvexityClass::strongly_convex, s->constants(), 3);
  const auto tr = ba_run(o, FeasibleSet::all_space(), vec({1.0}), vec({0.0}), sched, s.get());
  CHECK(tr.records.back().counters == OracleCounters{3, 6, 6});
  CHECK(o.counters() == OracleCounters{3, 6, 6});
}

TEST_CASE("starting at the solution stays there") {
  QuadraticSpectraSpec spec;
  spec.inner_spectrum = {1.0, 2.0};
  spec.outer_spectrum = {1.0, 3.0};
  spec.x_star = {0.5, -0.5};
  auto q = make_quadratic_from_spectra(spec);
  const Vector xs = q->x_star(FeasibleSet::all_space());
  for (auto cls : {ConvexityClass::strongly_convex, ConvexityClass::convex,
                   ConvexityClass::nonconvex}) {
    BilevelOracle o = make_exact(q);
    const auto sched = ba_schedule(cls, q->constants(), 10);
    const auto tr = ba_run(o, FeasibleSet::all_space(), xs, q->ystar(xs), sched, q.get());
    for (const auto& r : tr.records) CHECK((r.x - xs).norm() < 1e-12);
  }
}

TEST_CASE("convex preset reports the uniform average, nonconvex a drawn index") {
  QuadraticSpectraSpec spec;
  spec.inner_spectrum = {1.0, 2.0};
  spec.outer_spectrum = {0.1, 1.0};
  auto q = make_quadratic_from_spectra(spec);
  BilevelOracle o = make_exact(q);
  const auto cv = ba_schedule(ConvexityClass::convex, q->constants(), 8);
  const auto tr = ba_run(o, FeasibleSet::all_space(), vec({1.0, 1.0}), Vector::Zero(2), cv, q.get());
  Vector avg = Vector::Zero(2);
  for (const auto& r : tr.records) avg += r.x / 8.0;
  CHECK((tr.x_output - avg).norm() < 1e-14);
  CHECK((tr.x_average - avg).norm() < 1e-14);

  auto nc = ba_schedule(ConvexityClass::nonconvex, q->constants(), 8);
  nc.index_seed = 11;
  BilevelOracle o2 = make_exact(q);
  const auto tn = ba_run(o2, FeasibleSet::all_space(), vec({1.0, 1.0}), Vector::Zero(2), nc, q.get());
  REQUIRE(tn.output_index.has_value());
  CHECK(*tn.output_index >= 0);
  CHECK(*tn.output_index < 8);
  // mean_{j<k} ||grad f(x_j)||^2 with x_0 the start.
  double acc = q->composed_gradient(vec({1.0, 1.0})).squaredNorm();
  CHECK(tn.records[0].grad_norm_sq == doctest::Approx(acc));
  acc += q->composed_gradient(tn.records[0].x).squaredNorm();
  CHECK(tn.records[1].grad_norm_sq == doctest::Approx(acc / 2.0));
}

TEST_CASE("iterates stay feasible on a box") {
  QuadraticSpectraSpec spec;
  spec.inner_spectrum = {1.0, 3.0};
  spec.outer_spectrum = {1.0, 2.0};
  spec.x_star = {3.0, -3.0};
  auto q = make_quadratic_from_spectra(spec);
  const auto X = FeasibleSet::box(Vector::Constant(2, -1.0), Vector::Constant(2, 1.0));
  BilevelOracle o = make_exact(q);
  const auto sched = ba_schedule(ConvexityClass::strongly_convex, q->constants(), 60);
  const auto tr = ba_run(o, X, Vector::Zero(2), Vector::Zero(2), sched, q.get());
  for (const auto& r : tr.records) CHECK(X.contains(r.x));
  CHECK((tr.x_last - q->x_star(X)).norm() < 1e-6);
  CHECK(tr.records.back().f_gap >= -1e-12);
}

TEST_CASE("invalid inputs") {
  auto s = make_scalar1d();
  BilevelOracle o = make_exact(s);
  auto sched = ba_schedule(ConvexityClass::strongly_convex, s->constants(), 3);
  const auto X = FeasibleSet::box(Vector::Constant(1, -1.0), Vector::Constant(1, 1.0));
  CHECK_THROWS_AS(ba_run(o, X, vec({2.0}), vec({0.0}), sched), ConfigError);
  CHECK_THROWS_AS(ba_run(o, X, vec({0.5, 0.5}), vec({0.0}), sched), ConfigError);
  sched.alpha.pop_back();
  CHECK_THROWS_AS(ba_run(o, X, vec({0.5}), vec({0.0}), sched), ConfigError);
}

TEST_CASE("a numerical failure keeps the completed records") {
  // Inner Hessian becomes indefinite for x > 1: hess_yy g = 2 - 2x.
  struct Breaking : BilevelProblem {
    int dim_x() const override { return 1; }
    int dim_y() const override { return 1; }
    double f(const Vector& x, const Vector& y) const override { return x[0] * x[0] + y[0] * y[0]; }
    double g(const Vector& x, const Vector& y) const override {
      return (1 - x[0]) * y[0] * y[0] - y[0];
    }
    Vector grad_x_f(const Vector& x, const Vector&) const override { return 2 * x; }
    Vector grad_y_f(const Vector&, const Vector& y) const override { return 2 * y; }
    Vector grad_y_g(const Vector& x, const Vector& y) const override {
      return Vector::Constant(1, 2 * (1 - x[0]) * y[0] - 1);
    }
    Matrix hess_xy_g(const Vector&, const Vector& y) const override {
      return Matrix::Constant(1, 1, -2 * y[0]);
    }
    Matrix hess_yy_g(const Vector& x, const Vector&) const override {
      return Matrix::Constant(1, 1, 2 * (1 - x[0]));
    }
  };
  SmoothnessConstants c;
  c.mu_g = 1;
  c.L_g = 2;
  c.L_fy = 2;
  c.Lbar_fx = 2;
  c.C_gxy = 1;
  BilevelOracle o = BilevelOracle::exact(std::make_shared<Breaking>(), c);
  ScheduleSpec s;
  s.convexity = ConvexityClass::convex;
  s.N = 5;
  s.alpha.assign(5, -0.5);  // walks x upward until the Hessian is singular
  s.inner_steps.assign(5, 1);
  try {
    ba_run(o, FeasibleSet::all_space(), vec({0.0}), vec({0.0}), s);
    FAIL("expected a numerical failure");
  } catch (const RunFailure& e) {
    CHECK(e.partial().records.size() < 5);
  }
}
