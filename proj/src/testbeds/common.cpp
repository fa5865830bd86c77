#include <algorithm>
#include <cmath>
#include <limits>

#include "bilevel/rng.hpp"
#include "bilevel/testbeds.hpp"
#include "detail.hpp"

namespace bilevel {

Matrix random_orthogonal(int n, std::uint64_t seed) {
  RngStream rng("orthogonal", seed);
  Matrix g(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) g(i, j) = rng.gaussian();
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  // Fix column signs so that the factor is unique (diag of R positive).
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

BilevelOracle make_stochastic(std::shared_ptr<const Testbed> problem, const NoiseSpec& noise,
                              std::uint64_t seed) {
  auto c = problem->constants();
  return BilevelOracle::stochastic(std::move(problem), c, noise, StreamSeeds::from_base(seed));
}

BilevelOracle make_exact(std::shared_ptr<const Testbed> problem) {
  auto c = problem->constants();
  return BilevelOracle::exact(std::move(problem), c);
}

namespace detail {

double min_eigenvalue(const Matrix& s) {
  if (s.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(s, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double max_eigenvalue(const Matrix& s) {
  if (s.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(s, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double max_affine_norm(const Matrix& K, const Vector& c, const FeasibleSet& X) {
  const double knorm = spectral_norm(K);
  switch (X.kind()) {
    case FeasibleSet::Kind::all_space:
      return knorm == 0.0 ? c.norm() : std::numeric_limits<double>::infinity();
    case FeasibleSet::Kind::ball: {
      const auto& b = X.as_ball();
      return (K * b.center + c).norm() + knorm * b.radius;
    }
    case FeasibleSet::Kind::box: {
      const auto& b = X.as_box();
      if (b.lower.size() <= 16) {
        double best = 0.0;
        for (const Vector& v : X.box_vertices()) best = std::max(best, (K * v + c).norm());
        return best;
      }
      const Vector mid = 0.5 * (b.lower + b.upper);
      return (K * mid + c).norm() + knorm * 0.5 * (b.upper - b.lower).norm();
    }
  }
  return std::numeric_limits<double>::infinity();
}

Vector projected_quadratic_min(const Matrix& H, const Vector& l, const FeasibleSet& X,
                               const Vector& start) {
  const double L = std::max(max_eigenvalue(H), 1e-300);
  const double step = 1.0 / L;
  Vector x = X.project(start);
  Vector z = x;
  double t = 1.0;
  auto value = [&](const Vector& v) { return 0.5 * v.dot(H * v) + l.dot(v); };
  for (int it = 0; it < 200000; ++it) {
    const Vector xn = X.project(z - step * (H * z + l));
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    Vector zn = xn + ((t - 1.0) / tn) * (xn - x);
    if (value(xn) > value(x)) {
      // Adaptive restart keeps the accelerated scheme monotone.
      zn = xn;
      t = 1.0;
    } else {
      t = tn;
    }
    const double moved = (xn - x).norm();
    x = xn;
    z = zn;
    if (moved <= 1e-15 * (1.0 + x.norm())) break;
  }
  return x;
}

double minimize_interval(const std::function<double(double)>& fn, double lo, double hi) {
  const int grid = 2001;
  std::vector<double> pts(grid);
  const bool logscale = lo > 0.0;
  for (int i = 0; i < grid; ++i) {
    const double s = static_cast<double>(i) / (grid - 1);
    pts[i] = logscale ? lo * std::pow(hi / lo, s) : lo + s * (hi - lo);
  }
  pts.front() = lo;
  pts.back() = hi;
  int best = 0;
  double best_val = fn(pts[0]);
  for (int i = 1; i < grid; ++i) {
    const double v = fn(pts[i]);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  double a = pts[std::max(0, best - 1)];
  double b = pts[std::min(grid - 1, best + 1)];
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double fc = fn(c), fd = fn(d);
  for (int it = 0; it < 200 && b - a > 1e-15 * (1.0 + std::abs(a)); ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = fn(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = fn(d);
    }
  }
  const double mid = 0.5 * (a + b);
  return fn(mid) <= best_val ? mid : pts[best];
}

}  // namespace detail
}  // namespace bilevel
