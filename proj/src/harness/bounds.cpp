#include "bilevel/harness/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bilevel::harness {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool finite_value(const std::optional<double>& v) { return v && std::isfinite(*v); }

}  // namespace

double hypergradient_variance_bound(const BoundInputs& in) {
  const auto& c = in.constants;
  const double n = in.dim_x;
  const double m = in.dim_y;
  const double s_fx2 = n * in.noise.sigma_x * in.noise.sigma_x;
  const double s_fy2 = m * in.noise.sigma_y * in.noise.sigma_y;
  const double s_gxy2 = n * m * in.noise.sigma_gxy * in.noise.sigma_gxy;
  const double cg2 = c.C_gxy * c.C_gxy;
  const double cfy2 = std::isfinite(c.C_fy) ? c.C_fy * c.C_fy : c.C_fy;
  return 2.0 * s_fx2 + (4.0 / (c.mu_g * c.mu_g)) * (cg2 * s_fy2 + 2.0 * cfy2 * (s_gxy2 + cg2));
}

BoundCurve bound_curve(const BoundInputs& in, int N) {
  BoundCurve out;
  out.values.assign(static_cast<std::size_t>(std::max(N, 0)) + 1, kNaN);
  const auto& c = in.constants;
  const DerivedConstants d = derived_constants(c);
  const double Q = d.Q_g;
  const double qm1 = std::abs(Q - 1.0) < 1e-15 ? 0.0 : Q - 1.0;
  const double Lf = d.L_f;
  const double C = d.C;
  const double gap0 = in.initial_gap;
  const double d0 = in.initial_dist;
  const bool sc = in.convexity == ConvexityClass::strongly_convex;
  const bool cvx = in.convexity == ConvexityClass::convex;

  out.formula_id = in.solver + "_" + to_string(in.convexity);
  out.available = true;
  auto fail = [&](const std::string& why) {
    out.available = false;
    out.warnings.push_back(out.formula_id + " bound omitted: " + why);
  };

  // (Q_g - 1) * M^2 style terms vanish when Q_g = 1 whether or not M is finite.
  double M = 0.0;
  const bool inner_terms = qm1 != 0.0 && C != 0.0;
  if (inner_terms || in.solver == "bsa") {
    if (finite_value(c.M_init)) {
      M = *c.M_init;
    } else if (inner_terms) {
      fail("M (max initial inner distance) is unbounded or unknown");
    }
  }
  if (sc && !(c.mu_f > 0.0)) fail("mu_f must be positive");
  if (!(Lf > 0.0) || !std::isfinite(Lf)) fail("L_f must be positive and finite");
  if (cvx && !finite_value(c.D_X)) fail("D_X is needed and X is unbounded");
  const double D = c.D_X.value_or(0.0);

  const double mu = c.mu_f;
  const double CM2 = C * C * M * M;
  auto at = [&](int k) -> double& { return out.values[static_cast<std::size_t>(k)]; };

  if (in.solver == "ba" || in.solver == "aba") {
    if (!out.available) return out;
    if (in.solver == "ba" && sc) {
      const double gamma = std::min(mu / (3.0 * Lf), 2.0 / (Q + 1.0));
      const double base = gap0 + (qm1 == 0.0 ? 0.0 : qm1 * CM2 / (6.0 * Lf));
      for (int k = 0; k <= N; ++k) at(k) = std::pow(1.0 - gamma, k) * base;
    } else if (in.solver == "ba" && cvx) {
      const double num = 18.0 * Lf * D * D +
                         (qm1 == 0.0 ? 0.0 : qm1 * qm1 * std::pow(Q + 1.0, 6) * CM2 / (75.0 * Lf));
      at(0) = gap0;
      for (int k = 1; k <= N; ++k) at(k) = num / k;
    } else if (in.solver == "ba") {
      const double num = 18.0 * Lf * gap0 + (qm1 == 0.0 ? 0.0 : 5.0 * qm1 * std::pow(Q + 1.0, 3) * CM2);
      for (int k = 1; k <= N; ++k) at(k) = num / k;
    } else if (sc) {
      const double gamma = std::min(0.5 * std::sqrt(mu / (3.0 * Lf)), 2.0 / (Q + 1.0));
      const double base = gap0 + (mu + 12.0 * Lf) * d0 * d0 / 4.0 +
                          (qm1 == 0.0 ? 0.0 : 7.0 * qm1 * CM2 / (4.0 * mu));
      for (int k = 0; k <= N; ++k) at(k) = std::pow(1.0 - gamma, k) * base;
    } else {
      const double inner =
          15.0 * Lf * D * D + (qm1 == 0.0 ? 0.0 : 16.0 * qm1 * qm1 * std::pow(Q + 1.0, 6) * CM2 / Lf);
      at(0) = gap0;
      for (int k = 1; k <= N; ++k) at(k) = 2.0 / (k * (k + 1.0)) * inner;
    }
    return out;
  }

  if (in.solver != "bsa") {
    fail("unknown solver");
    return out;
  }
  const double sigma_gy = std::sqrt(static_cast<double>(in.dim_y)) * in.noise.sigma_gy;
  const double inner_scale = std::max(M, sigma_gy / c.mu_g);
  if (C != 0.0 && !finite_value(c.M_init)) fail("M (max initial inner distance) is unknown");
  const double C1 = C == 0.0 ? 0.0 : C * inner_scale;
  const double C2 = (c.C_gxy == 0.0 || c.C_fy == 0.0) ? 0.0 : c.C_gxy * c.C_fy / c.mu_g;
  if (!std::isfinite(C2)) fail("C_fy is unbounded over the region");
  const double sf2 = hypergradient_variance_bound(in);
  if (!std::isfinite(sf2)) fail("hypergradient variance bound is not finite");
  if (!out.available) return out;

  if (sc) {
    if (!finite_value(c.C_fx)) {
      fail("C_fx is needed for the stochastic strongly convex bound");
      return out;
    }
    const double Cbar = *c.C_fx + C2;
    const double C3sq = (2.0 * (32.0 * Lf + mu) * (C1 * C1 + C2 * C2) + 16.0 * Lf * Cbar * Cbar) / mu +
                        4.0 * sf2;
    at(0) = gap0;
    for (int k = 1; k <= N; ++k) {
      const double kk = k;
      const double bracket = C3sq + (8.0 * Lf + 3.0 * mu) * C1 * C1 + (4.0 * Lf + mu) * C2 * C2 +
                             4.0 * mu * sf2 + 16.0 * Lf * Cbar * Cbar * std::log(kk) / kk;
      at(k) = mu * d0 * d0 / (2.0 * kk * (kk + 1.0)) + 2.0 / (mu * mu * (kk + 1.0)) * bracket;
    }
  } else if (cvx) {
    at(0) = gap0;
    if (N >= 1) {
      at(N) = (2.0 * Lf * d0 * d0 + 3.0 * D * (std::sqrt(2.0) * C1 + C2) + sf2 / (2.0 * Lf)) /
              std::sqrt(static_cast<double>(N));
    }
  } else if (N >= 1) {
    at(N) = 8.0 / std::sqrt(static_cast<double>(N)) *
            (4.0 * Lf * gap0 + 36.0 * C1 * C1 + 6.0 * C2 * C2 + sf2);
  }
  return out;
}

}  // namespace bilevel::harness
