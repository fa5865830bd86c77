#include <doctest.h>

#include <cmath>

#include "bilevel/hia.hpp"
#include "bilevel/testbeds.hpp"
#include "quad_helpers.hpp"

using namespace bilevel;
using namespace test_helpers;

TEST_CASE("constant Hessian L_g I: (b/L) I at p = 0, zero otherwise") {
  auto q = quad(diag({2.0, 2.0}), Matrix::Identity(2, 1), Vector::Zero(2), Vector::Zero(2));
  BilevelOracle o = make_exact(q);
  const Vector x = Vector::Zero(1), y = Vector::Zero(2);
  const int b = 5;
  CHECK((hia_estimate_at_depth(o, x, y, b, 0).h_yy - Matrix::Identity(2, 2) * (b / 2.0)).norm() ==
        0.0);
  for (int p = 1; p < b; ++p) CHECK(hia_estimate_at_depth(o, x, y, b, p).h_yy.norm() == 0.0);
}

TEST_CASE("b = 1 always returns I / L_g") {
  auto q = quad(diag({1.0, 3.0}), Matrix::Identity(2, 1), Vector::Zero(2), Vector::Zero(2));
  BilevelOracle o = make_exact(q);
  RngStream r("hia", 1);
  for (int i = 0; i < 10; ++i) {
    const auto e = hia_estimate(o, Vector::Zero(1), Vector::Zero(2), 1, r);
    CHECK(e.p_drawn == 0);
    CHECK((e.h_yy - Matrix::Identity(2, 2) / 3.0).norm() < 1e-16);
  }
  CHECK(o.counters().hc_g == 0);
}

TEST_CASE("enumerated expectation for A = diag(1, 2), b = 4") {
  auto q = quad(diag({1.0, 2.0}), Matrix::Identity(2, 1), Vector::Zero(2), Vector::Zero(2));
  BilevelOracle o = make_exact(q);
  Matrix E = Matrix::Zero(2, 2);
  for (int p = 0; p < 4; ++p) E += hia_estimate_at_depth(o, Vector::Zero(1), Vector::Zero(2), 4, p).h_yy / 4.0;
  CHECK(E(0, 0) == doctest::Approx(0.9375).epsilon(1e-15));
  CHECK(E(1, 1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(std::abs(E(0, 1)) < 1e-16);
}

TEST_CASE("hia_apply equals the matrix estimate applied to v") {
  QuadraticSpectraSpec spec;
  spec.inner_spectrum = {1.0, 1.7, 2.5, 3.0};
  spec.outer_spectrum = {1.0};
  auto q = make_quadratic_from_spectra(spec);
  NoiseSpec n;
  n.sigma_gyy = 0.05;
  const Vector v = vec({1.0, -2.0, 0.5, 3.0});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    BilevelOracle oa = make_stochastic(q, n, seed), ob = make_stochastic(q, n, seed);
    RngStream ra("t", seed), rb("t", seed);
    const auto est = hia_estimate(oa, Vector::Zero(1), Vector::Zero(4), 6, ra);
    const auto app = hia_apply(ob, Vector::Zero(1), Vector::Zero(4), 6, v, rb);
    CHECK(est.p_drawn == app.p_drawn);
    CHECK((est.h_yy * v - app.value).norm() <= 1e-12 * (1 + app.value.norm()));
    CHECK(oa.counters() == ob.counters());
    CHECK(oa.counters().hc_g == est.p_drawn);
  }
}

TEST_CASE("hia_bias_bound values and monotonicity") {
  SmoothnessConstants c;
  c.mu_g = 1;
  c.L_g = 2;
  CHECK(hia_bias_bound(c, 3) == doctest::Approx(0.125));
  for (int b = 1; b < 20; ++b) CHECK(hia_bias_bound(c, b + 1) < hia_bias_bound(c, b));
  c.L_g = 1;
  CHECK(hia_bias_bound(c, 7) == 0.0);
  c.mu_g = 0.5;
  c.L_g = 2;
  CHECK(hia_second_moment_bound(c) == 4.0);
}

TEST_CASE("depth draws are uniform on {0, ..., b-1}") {
  auto q = quad(diag({1.0, 2.0}), Matrix::Identity(2, 1), Vector::Zero(2), Vector::Zero(2));
  BilevelOracle o = make_exact(q);
  RngStream r("hia", 3);
  std::vector<int> hist(5, 0);
  for (int i = 0; i < 10000; ++i) ++hist[hia_estimate(o, Vector::Zero(1), Vector::Zero(2), 5, r).p_drawn];
  for (int h : hist) CHECK(std::abs(h - 2000) < 200);
}
