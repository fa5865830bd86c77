#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "bilevel/constants.hpp"

namespace bilevel {

/// Gamma_1..Gamma_N of the product recursion
///   Gamma_1 = 1 if gamma_0 = 1 else 1 - gamma_0,
///   Gamma_k = Gamma_1 * prod_{i=1}^{k-1} (1 - gamma_i).
/// Element k-1 of the result is Gamma_k. Every gamma_k must lie in (0, 1].
std::vector<double> gamma_sequence(const std::function<double(int)>& gamma, int N);

/// Outer/inner schedules of the deterministic BA method.
struct ScheduleSpec {
  ConvexityClass convexity = ConvexityClass::convex;
  int N = 0;
  std::vector<double> alpha;     ///< outer steps alpha_0..alpha_{N-1}
  std::vector<int> inner_steps;  ///< t_0..t_{N-1}
  /// Restart each inner loop at y0 instead of the previous inner output.
  bool cold_start = false;
  /// Seed of the stream that draws the output index R (nonconvex class).
  std::uint64_t index_seed = 0;
};

/// Presets with alpha_k = 1 / (3 L_f) and
///   strongly convex: t_k = k + 1,
///   convex:          t_k = ceil((k + 1)^{1/4}),
///   nonconvex:       t_k = max(1, ceil((k + 1)^{1/4} / 2)).
/// Throws ConfigError for strongly convex with mu_f = 0.
ScheduleSpec ba_schedule(ConvexityClass convexity, const SmoothnessConstants& c, int N);

/// Parameters of the accelerated method. For the convex preset the outer
/// algorithm runs with mu_f = 0.
struct AbaSchedule {
  ConvexityClass convexity = ConvexityClass::convex;
  int N = 0;
  double mu_f = 0.0;
  std::vector<double> alpha;
  std::vector<int> inner_steps;
  std::vector<double> theta;   ///< theta_k in (0, 1]
  std::vector<double> lambda;  ///< lambda_k = 8 Gamma_{k+1} / alpha_k
  /// Gamma_1..Gamma_N of the gamma_k sequence that drives lambda_k.
  std::vector<double> Gamma;
  /// Gamma_1..Gamma_N built with gamma_k = theta_k (strongly convex preset).
  std::vector<double> Gamma_bar;
  double gamma = 0.0;  ///< constant gamma of the strongly convex preset
  bool cold_start = false;
};

/// Strongly convex: theta_k is the positive root of
///   theta^2 = alpha mu_f / 4 + (1 - theta) Gamma_bar_k   (Gamma_bar_0 = 1),
/// t_k = k + 1. Convex: theta_k = 2 / (k + 2), t_k = ceil(sqrt(k + 1)).
/// Verifies theta_k^2 <= alpha_k (mu_f + lambda_k) / 4 and constancy of
/// lambda_k / Gamma_{k+1}; a violation throws std::logic_error.
AbaSchedule aba_schedule(ConvexityClass convexity, const SmoothnessConstants& c, int N);

enum class Averaging { last, uniform_average, weighted_average };

/// Schedules of the stochastic BSA method.
struct BsaSchedule {
  ConvexityClass convexity = ConvexityClass::convex;
  int N = 0;
  std::vector<double> alpha;
  std::vector<int> inner_steps;
  std::vector<int> hia_terms;  ///< b_k >= 1
  Averaging averaging = Averaging::uniform_average;
  /// gamma_k used by the weighted average (gamma_0 = 1).
  std::vector<double> average_gamma;
  std::vector<std::uint64_t> seeds;
  bool cold_start = false;
};

/// b_k = max(1, ceil(ln(target) / (2 ln(Q_g / (Q_g - 1))))); 1 when Q_g = 1.
int hia_terms_for(double target, double Q_g);

/// Presets:
///   strongly convex: alpha_k = 4 / (mu_f (k + 2)), t_k = k (floored at 1
///                    unless exact_paper_schedule), b_k target k + 2,
///                    weighted average with gamma_k = 2 / (k + 2);
///   convex:          alpha_k = 1 / (2 L_f sqrt(N + 1)), t_k = k + 1,
///                    b_k target k + 1, uniform average;
///   nonconvex:       alpha_k as convex, t_k = ceil(sqrt(k + 1)),
///                    b_k target sqrt(k + 1), random output index.
BsaSchedule bsa_schedule(ConvexityClass convexity, const SmoothnessConstants& c, int N,
                         bool exact_paper_schedule = false);

}  // namespace bilevel
