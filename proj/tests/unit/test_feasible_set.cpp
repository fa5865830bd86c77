#include <doctest.h>

#include <cmath>
#include <random>

#include "bilevel/feasible_set.hpp"

using namespace bilevel;

namespace {
Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}
}  // namespace

TEST_CASE("box projection clamps each coordinate") {
  const auto X = FeasibleSet::box(Vector::Constant(1, -1.0), Vector::Constant(1, 1.0));
  CHECK(X.project(Vector::Constant(1, 2.0))[0] == 1.0);
  CHECK(X.project(Vector::Constant(1, -3.0))[0] == -1.0);
  CHECK(X.project(Vector::Constant(1, 0.25))[0] == 0.25);
}

TEST_CASE("all_space projection is the identity") {
  const auto X = FeasibleSet::all_space();
  const Vector p = v2(3, -7);
  CHECK(X.project(p) == p);
  CHECK(std::isinf(X.diameter()));
  CHECK_FALSE(X.bounded());
}

TEST_CASE("ball projection scales radially") {
  const auto X = FeasibleSet::ball(Vector::Zero(2), 1.0);
  const Vector q = X.project(v2(3, 4));
  CHECK(q[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(q[1] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(X.project(v2(0.1, 0.2)) == v2(0.1, 0.2));
  CHECK(X.diameter() == 2.0);
}

TEST_CASE("invalid sets are rejected") {
  CHECK_THROWS_AS(FeasibleSet::box(v2(1, 0), v2(0, 1)), ConfigError);
  CHECK_THROWS_AS(FeasibleSet::ball(Vector::Zero(2), 0.0), ConfigError);
  CHECK_THROWS_AS(FeasibleSet::box(Vector::Zero(2), Vector::Zero(3)), ConfigError);
}

TEST_CASE("projection properties: idempotent, feasible, nonexpansive") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 3.0);
  const std::vector<FeasibleSet> sets = {FeasibleSet::box(v2(-1, -2), v2(1, 0.5)),
                                         FeasibleSet::ball(v2(0.5, -0.5), 1.5)};
  for (const auto& X : sets) {
    for (int i = 0; i < 200; ++i) {
      const Vector p = v2(n(rng), n(rng));
      const Vector q = v2(n(rng), n(rng));
      const Vector pp = X.project(p);
      CHECK(X.contains(pp));
      CHECK((X.project(pp) - pp).norm() <= 1e-14);
      CHECK((pp - X.project(q)).norm() <= (p - q).norm() + 1e-12);
      // Variational inequality: <p - Pp, u - Pp> <= 0 for feasible u.
      const Vector u = X.project(v2(n(rng), n(rng)));
      CHECK((p - pp).dot(u - pp) <= 1e-12);
    }
  }
}

TEST_CASE("box diameter and vertices") {
  const auto X = FeasibleSet::box(v2(0, 0), v2(3, 4));
  CHECK(X.diameter() == doctest::Approx(5.0));
  CHECK(X.box_vertices().size() == 4);
}

TEST_CASE("convexity class names round-trip") {
  for (auto c : {ConvexityClass::strongly_convex, ConvexityClass::convex,
                 ConvexityClass::nonconvex}) {
    CHECK(convexity_from_string(to_string(c)) == c);
  }
  CHECK_THROWS_AS(convexity_from_string("concave"), ConfigError);
}
