#include "bilevel/hia.hpp"

#include <cmath>
#include <vector>

namespace bilevel {

namespace {

int draw_depth(int b, RngStream& truncation) {
  if (b < 1) throw ConfigError("HIA needs b >= 1");
  return static_cast<int>(truncation.uniform_index(static_cast<std::size_t>(b)));
}

}  // namespace

HiaEstimate hia_estimate_at_depth(BilevelOracle& oracle, const Vector& x, const Vector& y, int b,
                                  int p) {
  if (b < 1) throw ConfigError("HIA needs b >= 1");
  if (p < 0 || p >= b) throw ConfigError("HIA depth must lie in [0, b-1]");
  const double L = oracle.constants().L_g;
  const int m = oracle.dim_y();
  Matrix prod = Matrix::Identity(m, m);
  for (int i = 0; i < p; ++i) {
    const Matrix G = oracle.hess_yy_g(x, y);
    prod = prod * (Matrix::Identity(m, m) - G / L);
  }
  return {(static_cast<double>(b) / L) * prod, p, b, p};
}

HiaEstimate hia_estimate(BilevelOracle& oracle, const Vector& x, const Vector& y, int b,
                         RngStream& truncation) {
  return hia_estimate_at_depth(oracle, x, y, b, draw_depth(b, truncation));
}

HiaApplied hia_apply(BilevelOracle& oracle, const Vector& x, const Vector& y, int b,
                     const Vector& v, RngStream& truncation) {
  const int p = draw_depth(b, truncation);
  const double L = oracle.constants().L_g;
  std::vector<Matrix> samples;
  samples.reserve(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) samples.push_back(oracle.hess_yy_g(x, y));
  // The product is ordered G_1 ... G_p, so G_p meets v first.
  Vector w = v;
  for (int i = p - 1; i >= 0; --i) w -= (samples[static_cast<std::size_t>(i)] * w) / L;
  return {(static_cast<double>(b) / L) * w, p, b};
}

double hia_bias_bound(const SmoothnessConstants& c, int b) {
  if (b < 1) throw ConfigError("HIA needs b >= 1");
  const double q = c.L_g / c.mu_g;
  return (1.0 / c.mu_g) * std::pow((q - 1.0) / q, b);
}

double hia_second_moment_bound(const SmoothnessConstants& c) { return 2.0 / c.mu_g; }

}  // namespace bilevel
