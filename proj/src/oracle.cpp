#include "bilevel/oracle.hpp"

#include <cmath>

namespace bilevel {

bool NoiseSpec::is_zero() const {
  return sigma_x == 0.0 && sigma_y == 0.0 && sigma_gy == 0.0 && sigma_gxy == 0.0 &&
         sigma_gyy == 0.0;
}

void NoiseSpec::validate() const {
  for (double s : {sigma_x, sigma_y, sigma_gy, sigma_gxy, sigma_gyy}) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("noise levels must be finite and >= 0");
  }
}

StreamSeeds StreamSeeds::from_base(std::uint64_t base_seed) {
  return {derive_seed(base_seed, "xi"), derive_seed(base_seed, "zeta_grad"),
          derive_seed(base_seed, "zeta_cross"), derive_seed(base_seed, "zeta_hess")};
}

double hessian_noise_headroom(const NoiseSpec& noise, int dim_y) {
  return 3.0 * noise.sigma_gyy * std::sqrt(static_cast<double>(dim_y));
}

BilevelOracle::BilevelOracle(std::shared_ptr<const BilevelProblem> problem,
                             SmoothnessConstants constants, std::optional<NoiseSpec> noise,
                             StreamSeeds seeds)
    : problem_(std::move(problem)),
      constants_(constants),
      noise_(noise),
      xi_("xi", seeds.xi),
      zeta_grad_("zeta_grad", seeds.zeta_grad),
      zeta_cross_("zeta_cross", seeds.zeta_cross),
      zeta_hess_("zeta_hess", seeds.zeta_hess) {
  if (!problem_) throw ConfigError("oracle needs a problem");
  constants_.validate();
}

BilevelOracle BilevelOracle::exact(std::shared_ptr<const BilevelProblem> problem,
                                   SmoothnessConstants constants) {
  return BilevelOracle(std::move(problem), constants, std::nullopt, StreamSeeds{});
}

BilevelOracle BilevelOracle::stochastic(std::shared_ptr<const BilevelProblem> problem,
                                        SmoothnessConstants constants, NoiseSpec noise,
                                        StreamSeeds seeds) {
  noise.validate();
  if (problem) constants.L_g += hessian_noise_headroom(noise, problem->dim_y());
  return BilevelOracle(std::move(problem), constants, noise, seeds);
}

void BilevelOracle::add_noise(Vector& v, double sigma, RngStream& stream) const {
  if (sigma == 0.0) return;
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += sigma * stream.gaussian();
}

void BilevelOracle::add_noise(Matrix& m, double sigma, RngStream& stream) const {
  if (sigma == 0.0) return;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) += sigma * stream.gaussian();
  }
}

BilevelOracle::OuterGradient BilevelOracle::grad_f(const Vector& x, const Vector& y) {
  ++counters_.gc_f;
  OuterGradient out{problem_->grad_x_f(x, y), problem_->grad_y_f(x, y)};
  if (noise_) {
    add_noise(out.x, noise_->sigma_x, xi_);
    add_noise(out.y, noise_->sigma_y, xi_);
  }
  return out;
}

Vector BilevelOracle::grad_y_g(const Vector& x, const Vector& y) {
  ++counters_.gc_g;
  Vector v = problem_->grad_y_g(x, y);
  if (noise_) add_noise(v, noise_->sigma_gy, zeta_grad_);
  return v;
}

Matrix BilevelOracle::hess_xy_g(const Vector& x, const Vector& y) {
  ++counters_.hc_g;
  Matrix h = problem_->hess_xy_g(x, y);
  if (noise_) add_noise(h, noise_->sigma_gxy, zeta_cross_);
  return h;
}

Matrix BilevelOracle::hess_yy_g(const Vector& x, const Vector& y) {
  ++counters_.hc_g;
  Matrix h = problem_->hess_yy_g(x, y);
  if (noise_ && noise_->sigma_gyy != 0.0) h = perturb_hessian(h);
  return h;
}

Matrix BilevelOracle::perturb_hessian(const Matrix& exact) {
  const Eigen::Index m = exact.rows();
  Matrix e(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      e(i, j) = noise_->sigma_gyy * zeta_hess_.gaussian();
      e(j, i) = e(i, j);
    }
  }
  ++hess_stats_.samples;

  const double upper = constants_.L_g;
  auto inside = [&](double t) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(exact + t * e, Eigen::EigenvaluesOnly);
    const Vector& ev = es.eigenvalues();
    return ev.minCoeff() >= 0.0 && ev.maxCoeff() <= upper;
  };
  if (inside(1.0)) return exact + e;

  ++hess_stats_.clamped;
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (inside(mid) ? lo : hi) = mid;
  }
  return exact + lo * e;
}

}  // namespace bilevel
