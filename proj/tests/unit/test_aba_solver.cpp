#include <doctest.h>

#include <cmath>

#include "bilevel/aba_solver.hpp"
#include "bilevel/harness/bounds.hpp"
#include "bilevel/testbeds.hpp"
#include "quad_helpers.hpp"

using namespace bilevel;
using namespace test_helpers;

TEST_CASE("eta reduces to theta when mu_f = 0 and to 1 when theta = 1") {
  for (double th : {0.1, 0.5, 0.9}) CHECK(aba_eta(th, 3.0, 0.0) == doctest::Approx(th));
  CHECK(aba_eta(1.0, 2.0, 0.7) == doctest::Approx(1.0));
  CHECK(aba_eta(0.5, 0.0, 0.0) == 0.5);
}

TEST_CASE("two_point_prox minimizes the two-center model") {
  const auto X = FeasibleSet::all_space();
  const Vector d = vec({1.0, -2.0}), p = vec({0.0, 1.0}), q = vec({2.0, 2.0});
  const Vector u = two_point_prox(X, d, 2.0, p, 3.0, q);
  // Stationarity: d + a (u - p) + b (u - q) = 0.
  CHECK((d + 2.0 * (u - p) + 3.0 * (u - q)).norm() < 1e-14);
  CHECK_THROWS_AS(two_point_prox(X, d, 0.0, p, 0.0, q), ConfigError);
}

TEST_CASE("matches an independent accelerated recursion when the inner solve is exact") {
  // A = 2 I gives Q_g = 1, so one inner step lands on y*(x) and the
  // hypergradient equals the composed gradient H x + l.
  Matrix B(2, 2);
  B << 1.0, 0.5, -0.5, 1.0;
  auto q = quad(2.0 * Matrix::Identity(2, 2), B, vec({0.3, -0.1}), vec({1.0, 0.0}));
  const Matrix& H = q->composed_hessian();
  const Vector l = q->composed_gradient(Vector::Zero(2));
  for (auto cls : {ConvexityClass::convex, ConvexityClass::strongly_convex}) {
    const auto s = aba_schedule(cls, q->constants(), 25);
    BilevelOracle o = make_exact(q);
    const Vector x0 = vec({2.0, -1.0});
    const auto tr = aba_run(o, FeasibleSet::all_space(), x0, Vector::Zero(2), s, q.get());
    Vector x = x0, x_ag = x0;
    const double mu = s.mu_f;
    for (int k = 0; k < 25; ++k) {
      const double th = s.theta[k], lam = s.lambda[k];
      const double den = mu + lam - th * th * mu;
      const double eta = den == 0.0 ? th : (th * (mu + lam) - th * th * mu) / den;
      const Vector x_md = eta * x + (1 - eta) * x_ag;
      const Vector g = H * x_md + l;
      const double a = mu / 2.0, b = ((1 - th) * mu + lam) / (2 * th);
      x = (a * x_md + b * x - g) / (a + b);
      x_ag = x_md - s.alpha[k] * g;
      CHECK((tr.records[k].x - x_ag).norm() <= 1e-10 * (1 + x_ag.norm()));
    }
  }
}

TEST_CASE("first extrapolation point is x_0") {
  // theta_0 = 1 forces eta_0 = 1; the first inner loop therefore runs at x_0,
  // so its single gradient step matches gd_inner at x_0.
  auto s1 = make_scalar1d();
  auto sched = aba_schedule(ConvexityClass::convex, s1->constants(), 1);
  BilevelOracle o = make_exact(s1);
  const auto tr = aba_run(o, FeasibleSet::all_space(), vec({0.7}), vec({0.0}), sched, s1.get());
  CHECK(tr.records[0].inner_error == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("convex quadratic: gap of x_ag below the accelerated bound for N = 100") {
  QuadraticSpectraSpec spec;
  spec.inner_spectrum = {1.0, 2.0};
  spec.outer_spectrum = {0.0, 1.0};
  spec.x_star = {0.5, 0.5};
  spec.region = FeasibleSet::box(Vector::Constant(2, -2.0), Vector::Constant(2, 2.0));
  auto q = make_quadratic_from_spectra(spec);
  const auto& X = q->region();
  SmoothnessConstants c = q->constants();
  c.M_init = q->inner_radius(Vector::Zero(2), X);
  c.D_X = X.diameter();
  const int N = 100;
  const auto sched = aba_schedule(ConvexityClass::convex, c, N);
  BilevelOracle o = make_exact(q);
  const Vector x0 = vec({-1.5, 1.8});
  const auto tr = aba_run(o, X, x0, Vector::Zero(2), sched, q.get());

  const DerivedConstants d = derived_constants(c);
  const double Q = d.Q_g, M = *c.M_init, D = *c.D_X;
  const double by_hand = 2.0 / (N * (N + 1.0)) *
                         (15 * d.L_f * D * D + 16 * std::pow(Q - 1, 2) * std::pow(Q + 1, 6) *
                                                   d.C * d.C * M * M / d.L_f);
  harness::BoundInputs in;
  in.solver = "aba";
  in.convexity = ConvexityClass::convex;
  in.constants = c;
  in.initial_gap = q->composed_value(x0) - q->f_star(X);
  in.initial_dist = (x0 - q->x_star(X)).norm();
  in.dim_x = 2;
  in.dim_y = 2;
  const auto curve = harness::bound_curve(in, N);
  REQUIRE(curve.available);
  CHECK(curve.values[N] == doctest::Approx(by_hand).epsilon(1e-12));
  CHECK(tr.records.back().f_gap <= by_hand);
  for (const auto& r : tr.records) CHECK(r.f_gap <= curve.values[r.k] * (1 + 1e-12));
  CHECK(tr.records.back().counters.hc_g == 2 * N);
}
