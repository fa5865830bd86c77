#pragma once

#include <vector>

namespace bilevel::harness {

/// Least-squares fit of log(gap) against log(N) over a window of N.
struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  int points = 0;
  /// Points inside the window dropped for a nonpositive or non-finite gap.
  int excluded = 0;
  /// Fit of log(gap) against N (geometric decay shows up as a line here).
  double semilog_slope = 0.0;
  double semilog_r_squared = 0.0;
  /// The semilog fit explains the data better than the power law.
  bool super_polynomial = false;
};

/// Throws ConfigError when fewer than two usable points remain.
SlopeFit fit_rate(const std::vector<double>& N, const std::vector<double>& gap, double lo,
                  double hi);

}  // namespace bilevel::harness
