#include <doctest.h>

#include <cmath>

#include "bilevel/inner_loop.hpp"
#include "bilevel/testbeds.hpp"
#include "quad_helpers.hpp"

using namespace bilevel;
using namespace test_helpers;

TEST_CASE("gd_inner converges in one step when Q_g = 1") {
  auto s = make_scalar1d();
  BilevelOracle o = make_exact(s);
  const auto r = gd_inner(o, vec({1.0}), vec({0.0}), 1, vec({1.0}));
  CHECK(r.y_final[0] == 1.0);
  CHECK(r.grad_g_calls == 1);
  CHECK(*r.theoretical_bound == 0.0);
}

TEST_CASE("gd_inner with t = 0 returns y0 without gradient calls") {
  auto s = make_scalar1d();
  BilevelOracle o = make_exact(s);
  const auto r = gd_inner(o, vec({1.0}), vec({0.25}), 0);
  CHECK(r.y_final[0] == 0.25);
  CHECK(r.iterations == 0);
  CHECK(o.counters().gc_g == 0);
}

TEST_CASE("gd_inner contracts by (Q-1)/(Q+1) per step on A = diag(1, 2)") {
  auto q = quad(diag({1.0, 2.0}), Matrix::Identity(2, 2), Vector::Zero(2), Vector::Zero(2));
  BilevelOracle o = make_exact(q);
  const Vector x = vec({0.5, -1.0});
  const Vector ys = q->ystar(x);
  Vector y = vec({3.0, 3.0});
  for (int s = 0; s < 5; ++s) {
    const double before = (y - ys).norm();
    y = gd_inner(o, x, y, 1).y_final;
    CHECK((y - ys).norm() <= before / 3.0 + 1e-12);
  }
  const auto r = gd_inner(o, x, vec({3.0, 3.0}), 5, ys);
  CHECK((r.y_final - ys).norm() <= *r.theoretical_bound * (1 + 1e-12));
}

TEST_CASE("sgd_inner with zero noise follows y_t = 1 - 1/(t+1) on Scalar1D") {
  auto s = make_scalar1d();
  BilevelOracle o = make_stochastic(s, NoiseSpec{}, 1);
  for (int t : {0, 1, 2, 5, 20}) {
    const auto r = sgd_inner(o, vec({1.0}), vec({0.0}), t);
    CHECK(r.y_final[0] == doctest::Approx(1.0 - 1.0 / (t + 1)).epsilon(1e-14));
  }
}

TEST_CASE("sgd_inner mean error against its expected-rate bound") {
  auto s = make_scalar1d();
  NoiseSpec n;
  n.sigma_gy = 0.1;
  const int t = 50;
  double mean = 0.0;
  double bound = 0.0;
  const int seeds = 1000;
  for (int seed = 0; seed < seeds; ++seed) {
    BilevelOracle o = make_stochastic(s, n, static_cast<std::uint64_t>(seed));
    const auto r = sgd_inner(o, vec({1.0}), vec({0.0}), t, vec({1.0}));
    mean += std::abs(r.y_final[0] - 1.0) / seeds;
    bound = *r.theoretical_bound;
  }
  CHECK(bound == doctest::Approx(std::sqrt(2.0 / 52.0) * std::max(1.0, 0.1 / 2.0)));
  CHECK(mean <= bound);
}

TEST_CASE("sgd_inner_bound and inner_gradient_noise") {
  SmoothnessConstants c;
  c.mu_g = 2;
  c.L_g = 2;
  CHECK(sgd_inner_bound(c, 0, 1.0, 0.0) == doctest::Approx(1.0));
  CHECK(sgd_inner_bound(c, 2, 0.1, 4.0) == doctest::Approx(std::sqrt(0.5) * 2.0));
  auto q = quad(diag({1.0, 2.0, 3.0}), Matrix::Identity(3, 1), Vector::Zero(3), Vector::Zero(3));
  NoiseSpec n;
  n.sigma_gy = 0.2;
  CHECK(inner_gradient_noise(make_stochastic(q, n, 0)) == doctest::Approx(0.2 * std::sqrt(3.0)));
  CHECK(inner_gradient_noise(make_exact(q)) == 0.0);
}
