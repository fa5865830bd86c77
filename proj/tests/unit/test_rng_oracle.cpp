#include <doctest.h>

#include <cmath>
#include <set>

#include <Eigen/Eigenvalues>

#include "bilevel/oracle.hpp"
#include "bilevel/rng.hpp"
#include "bilevel/testbeds.hpp"

using namespace bilevel;

TEST_CASE("derive_seed separates stream names and base seeds") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t base : {0ULL, 1ULL, 2ULL}) {
    for (const char* name : {"xi", "zeta_grad", "zeta_cross", "zeta_hess", "hia_depth"}) {
      seen.insert(derive_seed(base, name));
    }
  }
  CHECK(seen.size() == 15);
  CHECK(derive_seed(7, "xi") == derive_seed(7, "xi"));
}

TEST_CASE("RngStream is reproducible and uniform_index stays in range") {
  RngStream a("s", 42), b("s", 42);
  for (int i = 0; i < 100; ++i) CHECK(a.gaussian() == b.gaussian());
  std::vector<int> hist(4, 0);
  for (int i = 0; i < 40000; ++i) {
    const auto k = a.uniform_index(4);
    REQUIRE(k < 4);
    ++hist[k];
  }
  for (int h : hist) CHECK(std::abs(h - 10000) < 600);
  CHECK(a.uniform_index(1) == 0);
}

TEST_CASE("exact oracle counts calls") {
  auto s = make_scalar1d();
  BilevelOracle o = make_exact(s);
  const Vector x = Vector::Constant(1, 1.0), y = Vector::Constant(1, 0.5);
  o.grad_f(x, y);
  o.grad_y_g(x, y);
  o.grad_y_g(x, y);
  o.hess_xy_g(x, y);
  o.hess_yy_g(x, y);
  CHECK(o.counters() == OracleCounters{1, 2, 2});
  o.reset_counters();
  CHECK(o.counters() == OracleCounters{});
}

TEST_CASE("zero noise reproduces the exact oracle bitwise") {
  auto s = make_scalar1d();
  BilevelOracle e = make_exact(s);
  BilevelOracle z = make_stochastic(s, NoiseSpec{}, 3);
  const Vector x = Vector::Constant(1, 0.7), y = Vector::Constant(1, -0.2);
  CHECK(e.grad_f(x, y).x == z.grad_f(x, y).x);
  CHECK(e.grad_y_g(x, y) == z.grad_y_g(x, y));
  CHECK(e.hess_xy_g(x, y) == z.hess_xy_g(x, y));
  CHECK(e.hess_yy_g(x, y) == z.hess_yy_g(x, y));
}

TEST_CASE("grad_y F noise has per-component variance sigma_y^2") {
  QuadraticSpectraSpec spec;
  spec.inner_spectrum = {1.0, 2.0, 3.0};
  spec.outer_spectrum = {1.0, 2.0};
  auto q = make_quadratic_from_spectra(spec);
  NoiseSpec n;
  n.sigma_y = 0.5;
  BilevelOracle o = make_stochastic(q, n, 8);
  const Vector x = Vector::Zero(2), y = Vector::Zero(3);
  const Vector exact = q->grad_y_f(x, y);
  const int draws = 100000;
  double acc = 0.0;
  for (int i = 0; i < draws; ++i) acc += (o.grad_f(x, y).y - exact).squaredNorm();
  CHECK(acc / draws == doctest::Approx(0.25 * 3).epsilon(0.05));
}

TEST_CASE("changing the xi seed leaves zeta streams bitwise unchanged") {
  auto s = make_scalar1d();
  NoiseSpec n{0.1, 0.1, 0.1, 0.1, 0.1};
  StreamSeeds a = StreamSeeds::from_base(5), b = a;
  b.xi += 1;
  BilevelOracle oa = BilevelOracle::stochastic(s, s->constants(), n, a);
  BilevelOracle ob = BilevelOracle::stochastic(s, s->constants(), n, b);
  const Vector x = Vector::Constant(1, 0.3), y = Vector::Constant(1, 0.1);
  bool differs_xi = false;
  for (int i = 0; i < 20; ++i) {
    differs_xi = differs_xi || oa.grad_f(x, y).x != ob.grad_f(x, y).x;
    CHECK(oa.grad_y_g(x, y) == ob.grad_y_g(x, y));
    CHECK(oa.hess_xy_g(x, y) == ob.hess_xy_g(x, y));
    CHECK(oa.hess_yy_g(x, y) == ob.hess_yy_g(x, y));
  }
  CHECK(differs_xi);
}

TEST_CASE("sampled inner Hessians are symmetric with spectrum in [0, L_g]") {
  QuadraticSpectraSpec spec;
  spec.inner_spectrum = {0.5, 1.0, 4.0};
  spec.outer_spectrum = {1.0};
  auto q = make_quadratic_from_spectra(spec);
  NoiseSpec n;
  n.sigma_gyy = 0.5;  // large enough to force the clamp
  BilevelOracle o = make_stochastic(q, n, 2);
  const double L = o.constants().L_g;
  CHECK(L == doctest::Approx(4.0 + hessian_noise_headroom(n, 3)));
  for (int i = 0; i < 500; ++i) {
    const Matrix H = o.hess_yy_g(Vector::Zero(1), Vector::Zero(3));
    CHECK((H - H.transpose()).norm() == 0.0);
    Eigen::SelfAdjointEigenSolver<Matrix> es(H);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12);
    CHECK(es.eigenvalues().maxCoeff() <= L + 1e-12);
  }
  CHECK(o.hessian_noise_stats().samples == 500);
}

TEST_CASE("noise specs reject negative sigmas") {
  NoiseSpec n;
  n.sigma_gy = -0.1;
  CHECK_THROWS_AS(n.validate(), ConfigError);
  CHECK(NoiseSpec{}.is_zero());
}
