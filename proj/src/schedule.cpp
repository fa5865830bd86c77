#include "bilevel/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace bilevel {

namespace {

void check_horizon(int N) {
  if (N < 0) throw ConfigError("iteration budget N must be >= 0");
}

double outer_lipschitz(const SmoothnessConstants& c) {
  const double L_f = derived_constants(c).L_f;
  if (!(L_f > 0.0) || !std::isfinite(L_f)) {
    throw ConfigError("schedule needs a positive finite L_f");
  }
  return L_f;
}

int ceil_int(double v) { return static_cast<int>(std::ceil(v - 1e-12)); }

}  // namespace

std::vector<double> gamma_sequence(const std::function<double(int)>& gamma, int N) {
  check_horizon(N);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(N));
  double running = 0.0;
  for (int k = 0; k < N; ++k) {
    const double g = gamma(k);
    if (!(g > 0.0 && g <= 1.0)) {
      throw ConfigError("gamma_" + std::to_string(k) + " must lie in (0, 1]");
    }
    if (k == 0) {
      running = g == 1.0 ? 1.0 : 1.0 - g;
    } else {
      running *= 1.0 - g;
    }
    out.push_back(running);
  }
  return out;
}

ScheduleSpec ba_schedule(ConvexityClass convexity, const SmoothnessConstants& c, int N) {
  check_horizon(N);
  if (convexity == ConvexityClass::strongly_convex && !(c.mu_f > 0.0)) {
    throw ConfigError("strongly convex preset needs mu_f > 0");
  }
  const double alpha = 1.0 / (3.0 * outer_lipschitz(c));
  ScheduleSpec s;
  s.convexity = convexity;
  s.N = N;
  s.alpha.assign(static_cast<std::size_t>(N), alpha);
  s.inner_steps.resize(static_cast<std::size_t>(N));
  for (int k = 0; k < N; ++k) {
    const double root4 = std::pow(k + 1.0, 0.25);
    int t = 1;
    switch (convexity) {
      case ConvexityClass::strongly_convex:
        t = k + 1;
        break;
      case ConvexityClass::convex:
        t = ceil_int(root4);
        break;
      case ConvexityClass::nonconvex:
        t = ceil_int(root4 / 2.0);
        break;
    }
    s.inner_steps[static_cast<std::size_t>(k)] = std::max(1, t);
  }
  return s;
}

AbaSchedule aba_schedule(ConvexityClass convexity, const SmoothnessConstants& c, int N) {
  check_horizon(N);
  if (convexity == ConvexityClass::nonconvex) {
    throw ConfigError("the accelerated method has no nonconvex preset");
  }
  if (convexity == ConvexityClass::strongly_convex && !(c.mu_f > 0.0)) {
    throw ConfigError("strongly convex preset needs mu_f > 0");
  }
  const double L_f = outer_lipschitz(c);
  const double alpha = 1.0 / (3.0 * L_f);
  const auto n = static_cast<std::size_t>(N);

  AbaSchedule s;
  s.convexity = convexity;
  s.N = N;
  s.alpha.assign(n, alpha);
  s.inner_steps.resize(n);
  s.theta.resize(n);
  s.lambda.resize(n);

  if (convexity == ConvexityClass::convex) {
    s.mu_f = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      s.theta[k] = 2.0 / (static_cast<double>(k) + 2.0);
      s.inner_steps[k] = std::max(1, ceil_int(std::sqrt(static_cast<double>(k) + 1.0)));
    }
    s.Gamma = gamma_sequence([&](int k) { return s.theta[static_cast<std::size_t>(k)]; }, N);
    s.Gamma_bar = s.Gamma;
  } else {
    s.mu_f = c.mu_f;
    const double Q = c.L_g / c.mu_g;
    s.gamma = std::min(0.5 * std::sqrt(c.mu_f / (3.0 * L_f)), 2.0 / (Q + 1.0));
    s.Gamma = gamma_sequence([&](int) { return s.gamma; }, N);
    // Gamma_bar runs forward with theta: theta_k needs Gamma_bar_k, and
    // Gamma_bar_{k+1} = (1 - theta_k) Gamma_bar_k, starting from 1.
    double gbar = 1.0;
    s.Gamma_bar.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double am = alpha * c.mu_f;
      s.theta[k] = 0.5 * (-gbar + std::sqrt(gbar * gbar + 4.0 * gbar + am));
      gbar *= 1.0 - s.theta[k];
      s.Gamma_bar[k] = gbar;
      s.inner_steps[k] = static_cast<int>(k) + 1;
    }
  }

  for (std::size_t k = 0; k < n; ++k) s.lambda[k] = 8.0 * s.Gamma[k] / alpha;

  const double ratio0 = n > 0 ? s.lambda[0] / s.Gamma[0] : 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double th = s.theta[k];
    if (!(th > 0.0 && th <= 1.0)) throw std::logic_error("theta outside (0, 1]");
    const double cap = alpha * (s.mu_f + s.lambda[k]) / 4.0;
    if (th * th > cap * (1.0 + 1e-12)) {
      throw std::logic_error("theta_k^2 <= alpha_k (mu_f + lambda_k) / 4 violated at k = " +
                             std::to_string(k));
    }
    if (std::abs(s.lambda[k] / s.Gamma[k] - ratio0) > 1e-9 * ratio0) {
      throw std::logic_error("lambda_k / Gamma_{k+1} is not constant");
    }
  }
  return s;
}

int hia_terms_for(double target, double Q_g) {
  if (Q_g <= 1.0 || !(target > 1.0)) return 1;
  const double b = std::log(target) / (2.0 * std::log(Q_g / (Q_g - 1.0)));
  return std::max(1, ceil_int(b));
}

BsaSchedule bsa_schedule(ConvexityClass convexity, const SmoothnessConstants& c, int N,
                         bool exact_paper_schedule) {
  check_horizon(N);
  const auto n = static_cast<std::size_t>(N);
  const double Q = c.L_g / c.mu_g;
  BsaSchedule s;
  s.convexity = convexity;
  s.N = N;
  s.alpha.resize(n);
  s.inner_steps.resize(n);
  s.hia_terms.resize(n);

  switch (convexity) {
    case ConvexityClass::strongly_convex: {
      if (!(c.mu_f > 0.0)) throw ConfigError("strongly convex preset needs mu_f > 0");
      s.averaging = Averaging::weighted_average;
      s.average_gamma.resize(n);
      for (std::size_t k = 0; k < n; ++k) {
        const double kk = static_cast<double>(k);
        s.alpha[k] = 4.0 / (c.mu_f * (kk + 2.0));
        s.inner_steps[k] = exact_paper_schedule ? static_cast<int>(k)
                                                : std::max(1, static_cast<int>(k));
        s.hia_terms[k] = hia_terms_for(kk + 2.0, Q);
        s.average_gamma[k] = 2.0 / (kk + 2.0);
      }
      break;
    }
    case ConvexityClass::convex:
    case ConvexityClass::nonconvex: {
      const double alpha = 1.0 / (2.0 * outer_lipschitz(c) * std::sqrt(N + 1.0));
      const bool cvx = convexity == ConvexityClass::convex;
      s.averaging = cvx ? Averaging::uniform_average : Averaging::last;
      for (std::size_t k = 0; k < n; ++k) {
        const double kk = static_cast<double>(k);
        s.alpha[k] = alpha;
        s.inner_steps[k] = cvx ? static_cast<int>(k) + 1 : std::max(1, ceil_int(std::sqrt(kk + 1.0)));
        s.hia_terms[k] = hia_terms_for(cvx ? kk + 1.0 : std::sqrt(kk + 1.0), Q);
      }
      break;
    }
  }
  return s;
}

}  // namespace bilevel
