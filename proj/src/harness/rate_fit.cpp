#include "bilevel/harness/rate_fit.hpp"

#include <cmath>

#include "bilevel/types.hpp"

namespace bilevel::harness {

namespace {

struct Line {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 1.0;
};

Line least_squares(const std::vector<double>& u, const std::vector<double>& v) {
  const double n = static_cast<double>(u.size());
  double mu = 0.0, mv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    mu += u[i];
    mv += v[i];
  }
  mu /= n;
  mv /= n;
  double suu = 0.0, suv = 0.0, svv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    suu += (u[i] - mu) * (u[i] - mu);
    suv += (u[i] - mu) * (v[i] - mv);
    svv += (v[i] - mv) * (v[i] - mv);
  }
  Line l;
  if (suu == 0.0) throw ConfigError("fit window holds a single abscissa");
  l.slope = suv / suu;
  l.intercept = mv - l.slope * mu;
  if (svv > 0.0) {
    double sse = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double e = v[i] - (l.intercept + l.slope * u[i]);
      sse += e * e;
    }
    l.r_squared = std::min(1.0, std::max(0.0, 1.0 - sse / svv));
  }
  return l;
}

}  // namespace

SlopeFit fit_rate(const std::vector<double>& N, const std::vector<double>& gap, double lo,
                  double hi) {
  if (N.size() != gap.size()) throw ConfigError("fit_rate needs equally long columns");
  if (!(lo <= hi)) throw ConfigError("fit window is empty");
  SlopeFit fit;
  fit.window_lo = lo;
  fit.window_hi = hi;
  std::vector<double> logn, n_lin, logg;
  for (std::size_t i = 0; i < N.size(); ++i) {
    if (!(N[i] >= lo && N[i] <= hi)) continue;
    if (!(gap[i] > 0.0) || !std::isfinite(gap[i]) || !(N[i] > 0.0)) {
      ++fit.excluded;
      continue;
    }
    logn.push_back(std::log(N[i]));
    n_lin.push_back(N[i]);
    logg.push_back(std::log(gap[i]));
  }
  fit.points = static_cast<int>(logn.size());
  if (fit.points < 2) throw ConfigError("fit window holds fewer than two positive points");
  const Line ll = least_squares(logn, logg);
  const Line sl = least_squares(n_lin, logg);
  fit.slope = ll.slope;
  fit.intercept = ll.intercept;
  fit.r_squared = ll.r_squared;
  fit.semilog_slope = sl.slope;
  fit.semilog_r_squared = sl.r_squared;
  fit.super_polynomial = sl.r_squared > ll.r_squared + 1e-12;
  return fit;
}

}  // namespace bilevel::harness
