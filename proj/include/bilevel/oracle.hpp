#pragma once

#include <cstdint>
#include <memory>
#include <optional>

#include "bilevel/constants.hpp"
#include "bilevel/problem.hpp"
#include "bilevel/rng.hpp"

namespace bilevel {

/// Cumulative oracle-call accounting. A joint (grad_x f, grad_y f) query is
/// one gc_f call; each Hessian block (xy or yy) is one hc_g call.
struct OracleCounters {
  std::int64_t gc_f = 0;
  std::int64_t gc_g = 0;
  std::int64_t hc_g = 0;

  friend bool operator==(const OracleCounters&, const OracleCounters&) = default;
  OracleCounters operator-(const OracleCounters& o) const {
    return {gc_f - o.gc_f, gc_g - o.gc_g, hc_g - o.hc_g};
  }
};

/// Per-component noise standard deviations of the stochastic oracles.
/// A vector oracle of dimension d has E||noise||^2 = d * sigma^2.
struct NoiseSpec {
  double sigma_x = 0.0;    ///< grad_x F, stream "xi"
  double sigma_y = 0.0;    ///< grad_y F, stream "xi"
  double sigma_gy = 0.0;   ///< grad_y G, stream "zeta_grad"
  double sigma_gxy = 0.0;  ///< hess_xy G entries, stream "zeta_cross"
  double sigma_gyy = 0.0;  ///< hess_yy G symmetric entries, stream "zeta_hess"

  bool is_zero() const;
  void validate() const;
};

/// Seeds of the four independent oracle streams.
struct StreamSeeds {
  std::uint64_t xi = 0;
  std::uint64_t zeta_grad = 0;
  std::uint64_t zeta_cross = 0;
  std::uint64_t zeta_hess = 0;

  static StreamSeeds from_base(std::uint64_t base_seed);
};

struct HessianNoiseStats {
  std::int64_t samples = 0;
  std::int64_t clamped = 0;
  double clamp_fraction() const {
    return samples == 0 ? 0.0 : static_cast<double>(clamped) / static_cast<double>(samples);
  }
};

/// Queryable first/second-order oracle over a BilevelProblem, in exact or
/// stochastic mode, with call counters.
///
/// In stochastic mode every returned quantity is the exact value plus
/// zero-mean Gaussian noise drawn from the stream of that oracle kind. Sampled
/// inner Hessians are symmetric perturbations rescaled (by bisection on the
/// perturbation size) so that their spectrum stays inside [0, L_g]; the
/// reported L_g of a stochastic oracle carries a headroom of
/// 3 * sigma_gyy * sqrt(m) above the exact-problem L_g so that the rescaling
/// is rarely active.
class BilevelOracle {
 public:
  struct OuterGradient {
    Vector x;
    Vector y;
  };

  static BilevelOracle exact(std::shared_ptr<const BilevelProblem> problem,
                             SmoothnessConstants constants);
  static BilevelOracle stochastic(std::shared_ptr<const BilevelProblem> problem,
                                  SmoothnessConstants constants, NoiseSpec noise,
                                  StreamSeeds seeds);

  bool is_stochastic() const { return noise_.has_value(); }
  int dim_x() const { return problem_->dim_x(); }
  int dim_y() const { return problem_->dim_y(); }

  const BilevelProblem& problem() const { return *problem_; }
  std::shared_ptr<const BilevelProblem> problem_ptr() const { return problem_; }
  /// Constants valid for the samples this oracle returns.
  const SmoothnessConstants& constants() const { return constants_; }
  const std::optional<NoiseSpec>& noise() const { return noise_; }

  /// grad_x f and grad_y f from one sample xi. gc_f += 1.
  OuterGradient grad_f(const Vector& x, const Vector& y);
  /// gc_g += 1.
  Vector grad_y_g(const Vector& x, const Vector& y);
  /// hc_g += 1.
  Matrix hess_xy_g(const Vector& x, const Vector& y);
  /// hc_g += 1.
  Matrix hess_yy_g(const Vector& x, const Vector& y);

  const OracleCounters& counters() const { return counters_; }
  void reset_counters() { counters_ = {}; }
  const HessianNoiseStats& hessian_noise_stats() const { return hess_stats_; }

 private:
  BilevelOracle(std::shared_ptr<const BilevelProblem> problem, SmoothnessConstants constants,
                std::optional<NoiseSpec> noise, StreamSeeds seeds);

  void add_noise(Vector& v, double sigma, RngStream& stream) const;
  void add_noise(Matrix& m, double sigma, RngStream& stream) const;
  Matrix perturb_hessian(const Matrix& exact);

  std::shared_ptr<const BilevelProblem> problem_;
  SmoothnessConstants constants_;
  std::optional<NoiseSpec> noise_;
  RngStream xi_;
  RngStream zeta_grad_;
  RngStream zeta_cross_;
  RngStream zeta_hess_;
  OracleCounters counters_;
  HessianNoiseStats hess_stats_;
};

/// Additive headroom on L_g used by stochastic oracles.
double hessian_noise_headroom(const NoiseSpec& noise, int dim_y);

}  // namespace bilevel
