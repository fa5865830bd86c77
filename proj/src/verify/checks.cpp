#include "bilevel/verify/checks.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "bilevel/ba_solver.hpp"
#include "bilevel/harness/experiment.hpp"
#include "bilevel/hia.hpp"
#include "bilevel/hypergrad.hpp"
#include "bilevel/inner_loop.hpp"
#include "bilevel/testbeds.hpp"
#include "bilevel/verify/reference.hpp"

namespace bilevel::verify {

using nlohmann::json;

namespace {

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::vector<double> logspace(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) {
    const double t = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
    v[i] = lo * std::pow(hi / lo, t);
  }
  return v;
}

json box_json(int n, double half) {
  return {{"kind", "box"},
          {"lower", std::vector<double>(n, -half)},
          {"upper", std::vector<double>(n, half)}};
}

json quadratic_json(const std::vector<double>& inner, const std::vector<double>& outer,
                    std::uint64_t seed, const std::vector<double>& x_star, double box_half) {
  json t = {{"kind", "quadratic"},
            {"inner_spectrum", inner},
            {"outer_spectrum", outer},
            {"coupling_weight", 0.5},
            {"seed", seed},
            {"x_star", x_star}};
  if (box_half > 0.0) t["region"] = box_json(static_cast<int>(outer.size()), box_half);
  return t;
}

harness::ExperimentResult execute_json(const json& j) {
  return harness::execute(harness::parse_config(j));
}

std::vector<std::shared_ptr<Testbed>> standard_testbeds() {
  std::vector<std::shared_ptr<Testbed>> out;
  out.push_back(make_scalar1d());
  QuadraticSpectraSpec a;
  a.inner_spectrum = {1.0, 2.0, 4.0};
  a.outer_spectrum = {0.5, 1.0, 3.0};
  a.seed = 7;
  a.x_star = {0.2, -0.4, 0.1};
  out.push_back(make_quadratic_from_spectra(a));
  QuadraticSpectraSpec b;
  b.inner_spectrum = {1.0, 1.5, 2.0, 3.0, 5.0};
  b.outer_spectrum = {1.0, 2.0};
  b.coupling_weight = 0.8;
  b.seed = 11;
  out.push_back(make_quadratic_from_spectra(b));
  StackelbergSpec s;
  out.push_back(make_stackelberg(s));
  out.push_back(std::make_shared<RidgeHyperTune>(RidgeHyperTune::Spec{}));
  return out;
}

Vector random_point(const Testbed& t, std::mt19937_64& rng) {
  if (t.name() == "ridge") {
    const FeasibleSet::Box& box = t.region().as_box();
    std::uniform_real_distribution<double> u(std::log(box.lower[0]), std::log(box.upper[0]));
    return Vector::Constant(1, std::exp(u(rng)));
  }
  std::normal_distribution<double> n(0.0, 1.0);
  Vector x(t.dim_x());
  for (auto& v : x) v = n(rng);
  return t.region().bounded() ? t.region().project(x) : x;
}

Vector random_unit(int m, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vector u(m);
  for (auto& v : u) v = n(rng);
  return u / u.norm();
}

ReferenceConstants reference_of(const SmoothnessConstants& c) {
  return reference_constants(c.mu_g, c.L_fx, c.L_fy, c.Lbar_fx, c.Lbar_fy, c.C_fy, c.L_gxy,
                             c.L_gyy, c.Lbar_gxy, c.Lbar_gyy, c.C_gxy);
}

std::shared_ptr<QuadraticBilevel> quadratic_with_inner(const std::vector<double>& spectrum, int n,
                                                       std::uint64_t seed) {
  const int m = static_cast<int>(spectrum.size());
  const Matrix U = random_orthogonal(m, seed);
  const Matrix A = U * Eigen::Map<const Vector>(spectrum.data(), m).asDiagonal() * U.transpose();
  std::mt19937_64 rng(seed + 1);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix B(m, n);
  for (Eigen::Index i = 0; i < B.size(); ++i) B.data()[i] = g(rng);
  auto d = QuadraticBilevel::standard_form(A, B, Vector::Zero(m), Matrix::Identity(n, n),
                                           Vector::Zero(n), Matrix::Identity(m, m), Vector::Zero(m));
  return std::make_shared<QuadraticBilevel>("inner_test", d, FeasibleSet::all_space());
}

struct Fit {
  double slope = 0.0;
  double r2 = 0.0;
  bool ok = false;
};

Fit fit_window(const std::vector<double>& k, const std::vector<double>& v, double lo, double hi) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (k[i] < lo || k[i] > hi) continue;
    if (!(v[i] > 0.0) || !std::isfinite(v[i])) return {};
    xs.push_back(k[i]);
    ys.push_back(v[i]);
  }
  if (xs.size() < 2) return {};
  const auto [s, r2] = loglog_fit(xs, ys);
  return {s, r2, true};
}

/// Jackknife standard error of the fitted slope over seeds, where per_seed[s]
/// is the curve of seed s.
double jackknife_slope_se(const std::vector<std::vector<double>>& per_seed,
                          const std::vector<double>& k, double lo, double hi) {
  const std::size_t n = per_seed.size();
  if (n < 2) return 0.0;
  std::vector<double> slopes;
  for (std::size_t leave = 0; leave < n; ++leave) {
    std::vector<double> mean(k.size(), 0.0);
    for (std::size_t s = 0; s < n; ++s) {
      if (s == leave) continue;
      for (std::size_t i = 0; i < k.size(); ++i) mean[i] += per_seed[s][i] / (n - 1);
    }
    slopes.push_back(fit_window(k, mean, lo, hi).slope);
  }
  double avg = 0.0;
  for (double s : slopes) avg += s / n;
  double ss = 0.0;
  for (double s : slopes) ss += (s - avg) * (s - avg);
  return std::sqrt(ss * (n - 1) / n);
}

CheckResult finish(std::string name, bool passed, std::string detail, const Timer& t) {
  return {std::move(name), passed, std::move(detail), t.seconds()};
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

CheckResult check_hypergradient_fd(int pairs, double tol) {
  Timer timer;
  const auto beds = standard_testbeds();
  std::mt19937_64 rng(20240101);
  double worst = 0.0;
  std::string worst_bed;
  for (int i = 0; i < pairs; ++i) {
    const auto& tb = beds[i % beds.size()];
    const Vector x = random_point(*tb, rng);
    const Vector y_guess = Vector::Zero(tb->dim_y());
    const Vector ys = newton_ystar(*tb, x, y_guess);
    BilevelOracle oracle = make_exact(tb);
    const Vector hg = hypergradient(oracle, x, ys).grad;
    const Vector fd = fd_gradient(
        [&](const Vector& z) { return reference_composed_value(*tb, z, ys); }, x);
    const double err = (hg - fd).norm() / (1.0 + fd.norm());
    if (err > worst) {
      worst = err;
      worst_bed = tb->name();
    }
  }
  return finish("hypergradient vs finite differences", worst <= tol,
                std::to_string(pairs) + " pairs, worst relative error " + num(worst) + " (" +
                    worst_bed + "), tol " + num(tol),
                timer);
}

CheckResult check_hypergradient_error_bound(int samples) {
  Timer timer;
  auto beds = standard_testbeds();
  beds.push_back(std::make_shared<CauchyBilevel>(CauchyBilevel::Spec{}));
  std::mt19937_64 rng(424242);
  std::uniform_real_distribution<double> radius(0.0, 1.0);
  int violations = 0;
  double worst_ratio = 0.0;
  double scalar_best = 0.0;
  double const_mismatch = 0.0;
  for (int i = 0; i < samples; ++i) {
    const auto& tb = beds[i % beds.size()];
    const SmoothnessConstants c = tb->constants();
    const double C = derived_constants(c).C;
    const double C_ref = reference_of(c).C;
    const_mismatch = std::max(const_mismatch, std::abs(C - C_ref) / std::max(1.0, C_ref));
    const Vector x = random_point(*tb, rng);
    const Vector ys = tb->ystar(x);
    const Vector ybar = ys + radius(rng) * random_unit(tb->dim_y(), rng);
    BilevelOracle oracle = make_exact(tb);
    const Vector grad = tb->composed_gradient(x);
    const double err = (hypergradient(oracle, x, ybar).grad - grad).norm();
    const double dist = (ybar - ys).norm();
    const double allowed = C_ref * dist * (1.0 + 1e-12) + 1e-14 * (1.0 + grad.norm());
    if (err > allowed) ++violations;
    if (dist > 0.0) {
      const double ratio = err / (C_ref * dist);
      worst_ratio = std::max(worst_ratio, ratio);
      if (tb->name() == "scalar1d") scalar_best = std::max(scalar_best, ratio);
    }
  }
  const bool ok = violations == 0 && scalar_best >= 0.99 && const_mismatch <= 1e-12;
  return finish("hypergradient error bound",
                ok,
                std::to_string(samples) + " samples, " + std::to_string(violations) +
                    " violations, max ratio " + num(worst_ratio) + ", Scalar1D ratio " +
                    num(scalar_best) + ", C mismatch " + num(const_mismatch),
                timer);
}

CheckResult check_gd_contraction(const std::vector<double>& condition_numbers, int steps) {
  Timer timer;
  bool ok = true;
  std::string detail;
  std::mt19937_64 rng(99);
  for (double Q : condition_numbers) {
    const auto tb = quadratic_with_inner(logspace(1.0, Q, 6), 3, 5 + static_cast<int>(Q));
    BilevelOracle oracle = make_exact(tb);
    const double q = (Q - 1.0) / (Q + 1.0);
    const Vector x = Vector::Zero(3);
    Vector y = random_unit(6, rng) * 3.0;
    double worst = 0.0;
    for (int s = 0; s < steps; ++s) {
      const double before = y.norm();
      y = gd_inner(oracle, x, y, 1).y_final;
      if (before > 0.0) worst = std::max(worst, y.norm() / before);
    }
    const auto full = gd_inner(oracle, x, random_unit(6, rng), steps, Vector::Zero(6));
    const bool bound_ok = full.y_final.norm() <= *full.theoretical_bound * (1.0 + 1e-12) + 1e-300;
    const bool this_ok = worst <= q + 1e-12 && bound_ok;
    ok = ok && this_ok;
    detail += "Q=" + num(Q) + " max ratio " + num(worst) + " vs " + num(q) + "; ";
  }
  return finish("inner gradient descent contraction", ok, detail, timer);
}

CheckResult check_hia_enumeration(const std::vector<double>& condition_numbers, int b_max) {
  Timer timer;
  bool ok = true;
  double worst_slack = -1.0;
  double worst_closed = 0.0;
  double worst_lib_bound = 0.0;
  for (double Q : condition_numbers) {
    for (int m : {4, 10}) {
      const std::vector<double> spectrum = logspace(1.0, Q, m);
      const auto tb = quadratic_with_inner(spectrum, 2, 100 + m);
      BilevelOracle oracle = make_exact(tb);
      const Matrix U = random_orthogonal(m, 100 + m);
      Vector inv(m);
      for (int i = 0; i < m; ++i) inv[i] = 1.0 / spectrum[i];
      const Matrix H_inv = U * inv.asDiagonal() * U.transpose();
      const Matrix H = tb->hess_yy_g(Vector::Zero(2), Vector::Zero(m));
      const Vector x = Vector::Zero(2), y = Vector::Zero(m);
      for (int b = 1; b <= b_max; ++b) {
        Matrix E = Matrix::Zero(m, m);
        for (int p = 0; p < b; ++p) E += hia_estimate_at_depth(oracle, x, y, b, p).h_yy / b;
        const double err = spectral_norm_sym(H_inv - E);
        const double bound = hia_bias_closed_form(1.0, Q, b);
        const double rel = err / bound - 1.0;
        worst_slack = std::max(worst_slack, rel);
        if (rel > 1e-10) ok = false;
        const double closed =
            spectral_norm_sym(E - hia_expectation_closed_form(H, oracle.constants().L_g, b)) /
            spectral_norm_sym(H_inv);
        worst_closed = std::max(worst_closed, closed);
        if (closed > 1e-10) ok = false;
        const double lib = std::abs(hia_bias_bound(oracle.constants(), b) - bound) / bound;
        worst_lib_bound = std::max(worst_lib_bound, lib);
        if (lib > 1e-10) ok = false;
      }
    }
  }
  return finish("Neumann-series expectation bias", ok,
                "max (error/bound - 1) " + num(worst_slack) + ", closed-form mismatch " +
                    num(worst_closed) + ", bound formula mismatch " + num(worst_lib_bound),
                timer);
}

CheckResult check_ba_strongly_convex(int N) {
  Timer timer;
  std::string detail;
  bool ok = true;

  const json cfg = {{"testbed", quadratic_json({1.0, 1.5, 2.0}, {0.5, 1.0, 2.0}, 3,
                                               {0.3, -0.2, 0.1}, 2.0)},
                    {"solver", "ba"},
                    {"class", "strongly_convex"},
                    {"N", N},
                    {"feasible_set", "region"},
                    {"x0", {1.5, -1.5, 1.0}}};
  const auto res = execute_json(cfg);
  const auto tb = harness::build_testbed(cfg.at("testbed"));
  SmoothnessConstants c = tb->constants();
  const Vector x0 = Eigen::Vector3d(1.5, -1.5, 1.0);
  const double M = tb->inner_radius(Vector::Zero(tb->dim_y()), tb->region());
  const ReferenceConstants rc = reference_of(c);
  const double Q = c.L_g / c.mu_g;
  const double gamma = std::min(c.mu_f / (3.0 * rc.L_f), 2.0 / (Q + 1.0));
  const double gap0 = tb->composed_value(x0) - tb->f_star(tb->region());
  int violations = 0;
  double max_ratio = 0.0, bound_mismatch = 0.0;
  for (const auto& r : res.runs.front().records) {
    const double bound = std::pow(1.0 - gamma, r.k) *
                         (gap0 + (Q - 1.0) * rc.C * rc.C * M * M / (6.0 * rc.L_f));
    if (r.f_gap > bound * (1.0 + 1e-12)) ++violations;
    max_ratio = std::max(max_ratio, r.f_gap / bound);
    bound_mismatch = std::max(bound_mismatch, std::abs(res.bound.values[r.k] - bound) / bound);
  }
  ok = violations == 0 && bound_mismatch <= 1e-10 &&
       static_cast<int>(res.runs.front().records.size()) == N;
  detail = "k<=" + std::to_string(N) + ": " + std::to_string(violations) +
           " bound violations, max gap/bound " + num(max_ratio) + ", harness bound mismatch " +
           num(bound_mismatch);

  auto s1 = make_scalar1d();
  BilevelOracle oracle = make_exact(s1);
  const int Ns = 60;
  const ScheduleSpec sched = ba_schedule(ConvexityClass::strongly_convex, s1->constants(), Ns);
  const RunTrace tr = ba_run(oracle, FeasibleSet::all_space(), Vector::Ones(1), Vector::Zero(1),
                             sched, s1.get());
  double worst = 0.0;
  for (const auto& r : tr.records) {
    worst = std::max(worst, std::abs(r.x[0] - std::pow(2.0 / 3.0, r.k)));
  }
  ok = ok && worst <= 1e-12;
  detail += "; Scalar1D max |x_k - (2/3)^k| " + num(worst);
  return finish("BA strongly convex bound", ok, detail, timer);
}

namespace {

// Composed Hessian with eigenvalues log-spaced over six decades; started
// from x* + V 1 (equal error in every eigen-direction) the gaps follow clean
// power laws instead of depending on how a random start loads the spectrum.
json ill_conditioned_testbed() {
  return quadratic_json({1.0, 2.0}, logspace(1e-6, 1.0, 10), 17, std::vector<double>(10, 0.0),
                        0.0);
}

std::vector<double> spectral_start(const json& testbed) {
  const auto tb = std::dynamic_pointer_cast<QuadraticBilevel>(harness::build_testbed(testbed));
  Eigen::SelfAdjointEigenSolver<Matrix> es(tb->composed_hessian());
  const Vector x0 = tb->x_star(FeasibleSet::all_space()) +
                    es.eigenvectors() * Vector::Ones(tb->dim_x());
  return {x0.data(), x0.data() + x0.size()};
}

json cauchy_testbed() {
  return {{"kind", "cauchy"}, {"inner_spectrum", {1.0, 2.0}}, {"dim_x", 3}, {"seed", 5}};
}

void trace_columns(const RunTrace& tr, std::vector<double>& k, std::vector<double>& gap,
                   std::vector<double>& grad) {
  for (const auto& r : tr.records) {
    k.push_back(r.k);
    gap.push_back(r.f_gap);
    grad.push_back(r.grad_norm_sq);
  }
}

}  // namespace

CheckResult check_deterministic_rates(int N) {
  Timer timer;
  struct Case {
    std::string label;
    json cfg;
    bool use_grad;
    double threshold;
  };
  const std::vector<double> x0 = spectral_start(ill_conditioned_testbed());
  std::vector<Case> cases = {
      {"BA convex", {{"testbed", ill_conditioned_testbed()}, {"solver", "ba"}, {"class", "convex"},
                     {"N", N}, {"x0", x0}}, false, -0.9},
      {"ABA convex", {{"testbed", ill_conditioned_testbed()}, {"solver", "aba"},
                      {"class", "convex"}, {"N", N}, {"x0", x0}}, false, -1.8},
      {"BA nonconvex", {{"testbed", cauchy_testbed()}, {"solver", "ba"}, {"class", "nonconvex"},
                        {"N", N}, {"x0", {2.0, -1.0, 1.5}}}, true, -0.9},
  };
  bool ok = true;
  std::string detail;
  for (const auto& c : cases) {
    const auto res = execute_json(c.cfg);
    std::vector<double> k, gap, grad;
    trace_columns(res.runs.front(), k, gap, grad);
    const Fit f = fit_window(k, c.use_grad ? grad : gap, 10.0, N);
    const bool this_ok = f.ok && f.slope <= c.threshold && f.r2 >= 0.95;
    ok = ok && this_ok;
    detail += c.label + " slope " + num(f.slope) + " (<= " + num(c.threshold) + ") r2 " +
              num(f.r2) + "; ";
  }
  const double t = timer.seconds();
  ok = ok && t < 60.0;
  return finish("deterministic rate orders", ok, detail, timer);
}

namespace {

NoiseSpec default_noise() { return {0.1, 0.1, 0.1, 0.05, 0.05}; }

json noise_json(const NoiseSpec& s) {
  return {{"sigma_x", s.sigma_x},
          {"sigma_y", s.sigma_y},
          {"sigma_gy", s.sigma_gy},
          {"sigma_gxy", s.sigma_gxy},
          {"sigma_gyy", s.sigma_gyy}};
}

json noisy_quadratic() {
  return quadratic_json({1.0, 2.0}, {1.0, 2.0}, 23, {0.2, -0.3}, 3.0);
}

}  // namespace

CheckResult check_bsa_rates(int seeds) {
  Timer timer;
  bool ok = true;
  std::string detail;
  const std::vector<double> x0 = {2.0, 2.0};

  {
    const int N = 1000;
    const json cfg = {{"testbed", noisy_quadratic()}, {"solver", "bsa"},
                      {"class", "strongly_convex"},   {"N", N},
                      {"feasible_set", "region"},     {"x0", x0},
                      {"noise", noise_json(default_noise())}, {"seed", 1}, {"seeds", seeds}};
    const auto res = execute_json(cfg);
    std::vector<double> k;
    for (int i = 1; i <= N; ++i) k.push_back(i);
    std::vector<std::vector<double>> per;
    for (const auto& r : res.runs) {
      std::vector<double> kk, gap, grad;
      trace_columns(r, kk, gap, grad);
      per.push_back(gap);
    }
    const Fit f = fit_window(k, res.ensemble->mean_f_gap, 10.0, N);
    const double se = jackknife_slope_se(per, k, 10.0, N);
    const bool this_ok = f.ok && f.slope <= -0.8;
    ok = ok && this_ok;
    detail += "strongly convex slope " + num(f.slope) + " +- " + num(se) + " (<= -0.8); ";
  }

  const std::vector<int> Ns = {10, 22, 46, 100, 215, 464, 1000};
  for (const auto& [cls, use_grad] :
       std::vector<std::pair<std::string, bool>>{{"convex", false}, {"nonconvex", true}}) {
    json cfg = {{"testbed", noisy_quadratic()}, {"solver", "bsa"}, {"class", cls}, {"N", 10},
                {"feasible_set", "region"}, {"x0", x0}, {"noise", noise_json(default_noise())},
                {"seed", 1}, {"seeds", seeds}};
    const auto sweep = harness::sweep_over_N(harness::parse_config(cfg), Ns);
    std::vector<double> n, mean;
    std::vector<std::vector<double>> per(seeds);
    for (const auto& pt : sweep) {
      n.push_back(pt.N);
      mean.push_back(use_grad ? pt.mean_grad_norm_sq : pt.mean_f_gap);
      const auto& v = use_grad ? pt.grad_norm_sq_per_seed : pt.f_gap_per_seed;
      for (int s = 0; s < seeds; ++s) per[s].push_back(v[s]);
    }
    const Fit f = fit_window(n, mean, 10.0, 1000.0);
    const double se = jackknife_slope_se(per, n, 10.0, 1000.0);
    const bool this_ok = f.ok && f.slope <= -0.4;
    ok = ok && this_ok;
    detail += cls + " slope " + num(f.slope) + " +- " + num(se) + " (<= -0.4); ";
  }
  ok = ok && timer.seconds() < 300.0;
  return finish("stochastic expected rates", ok, detail, timer);
}

namespace {

int ceil_tol(double v) { return static_cast<int>(std::ceil(v - 1e-9)); }

int reference_inner_steps(const std::string& solver, ConvexityClass cls, int k) {
  const double k1 = k + 1.0;
  if (solver == "ba") {
    if (cls == ConvexityClass::strongly_convex) return k + 1;
    if (cls == ConvexityClass::convex) return ceil_tol(std::pow(k1, 0.25));
    return std::max(1, ceil_tol(std::pow(k1, 0.25) / 2.0));
  }
  if (solver == "aba") {
    return cls == ConvexityClass::strongly_convex ? k + 1 : ceil_tol(std::sqrt(k1));
  }
  if (cls == ConvexityClass::strongly_convex) return std::max(1, k);
  if (cls == ConvexityClass::convex) return k + 1;
  return ceil_tol(std::sqrt(k1));
}

}  // namespace

CheckResult check_counters() {
  Timer timer;
  bool ok = true;
  std::string detail;
  int runs = 0;
  const int N = 40;
  const std::vector<std::tuple<std::string, std::string, bool>> combos = {
      {"ba", "strongly_convex", false}, {"ba", "convex", false},  {"ba", "nonconvex", false},
      {"aba", "strongly_convex", false}, {"aba", "convex", false}, {"bsa", "strongly_convex", true},
      {"bsa", "convex", true},          {"bsa", "nonconvex", true}};
  for (const auto& [solver, cls, noisy] : combos) {
    json cfg = {{"testbed", noisy_quadratic()}, {"solver", solver}, {"class", cls}, {"N", N},
                {"feasible_set", "region"}, {"x0", {1.0, -1.0}}};
    if (noisy) {
      cfg["noise"] = noise_json(default_noise());
      cfg["seeds"] = 3;
    }
    const auto res = execute_json(cfg);
    const ConvexityClass c = convexity_from_string(cls);
    for (const auto& tr : res.runs) {
      ++runs;
      std::int64_t gc_g = 0, hc_g = 0;
      for (const auto& r : tr.records) {
        gc_g += reference_inner_steps(solver, c, r.k - 1);
        hc_g += noisy ? 1 + r.hia_depth : 2;
        const bool match = r.counters.gc_f == r.k && r.counters.gc_g == gc_g &&
                           r.counters.hc_g == hc_g;
        if (!match) {
          ok = false;
          detail += solver + "/" + cls + " mismatch at k=" + std::to_string(r.k) + "; ";
          break;
        }
      }
    }
  }
  detail += std::to_string(runs) + " runs with exact counter identities; ";

  // Oracle complexity growth GC(g) against GC(f) on BA convex, with the
  // accuracy taken relative to the initial gap.
  const std::vector<double> x0 = spectral_start(ill_conditioned_testbed());
  const json cfg = {{"testbed", ill_conditioned_testbed()}, {"solver", "ba"}, {"class", "convex"},
                    {"N", 20000}, {"x0", x0}};
  const auto res = execute_json(cfg);
  const auto tb = harness::build_testbed(cfg.at("testbed"));
  const double gap0 = tb->composed_value(Eigen::Map<const Vector>(x0.data(), 10)) -
                      tb->f_star(FeasibleSet::all_space());
  std::vector<double> gcf, gcg;
  bool reached = true;
  for (double eps : logspace(1e-1, 1e-3, 9)) {
    bool found = false;
    for (const auto& r : res.runs.front().records) {
      if (r.f_gap <= eps * gap0) {
        gcf.push_back(static_cast<double>(r.counters.gc_f));
        gcg.push_back(static_cast<double>(r.counters.gc_g));
        found = true;
        break;
      }
    }
    reached = reached && found;
  }
  if (!reached) {
    ok = false;
    detail += "accuracy 1e-3 not reached within the run";
  } else {
    const double slope = loglog_fit(gcf, gcg).first;
    ok = ok && std::abs(slope - 1.25) <= 0.15;
    detail += "GC(g) ~ GC(f)^" + num(slope) + " over GC(f) in [" + num(gcf.front()) + ", " +
              num(gcf.back()) + "] (target 1.25 +- 0.15)";
  }
  return finish("oracle complexity counters", ok, detail, timer);
}

CheckResult check_determinism(const std::filesystem::path& scratch) {
  Timer timer;
  const std::vector<std::pair<std::string, json>> configs = {
      {"scalar_ba", {{"testbed", {{"kind", "scalar1d"}}}, {"solver", "ba"},
                     {"class", "strongly_convex"}, {"N", 25}, {"x0", {1.0}}}},
      {"quad_aba", {{"testbed", noisy_quadratic()}, {"solver", "aba"}, {"class", "convex"},
                    {"N", 40}, {"feasible_set", "region"}}},
      {"ridge_ba", {{"testbed", {{"kind", "ridge"}}}, {"solver", "ba"}, {"class", "nonconvex"},
                    {"N", 30}, {"feasible_set", "region"}, {"x0", {5.0}}}},
      {"bsa_ens", {{"testbed", noisy_quadratic()}, {"solver", "bsa"}, {"class", "nonconvex"},
                   {"N", 40}, {"feasible_set", "region"}, {"noise", noise_json(default_noise())},
                   {"seed", 9}, {"seeds", 3}}},
      {"cauchy_bsa", {{"testbed", cauchy_testbed()}, {"solver", "bsa"}, {"class", "convex"},
                      {"N", 30}, {"noise", noise_json(default_noise())}, {"seed", 4}}},
  };
  bool ok = true;
  int files = 0;
  std::string detail;
  for (const auto& [name, j] : configs) {
    const auto cfg = harness::parse_config(j);
    const auto a = scratch / "a" / name;
    const auto b = scratch / "b" / name;
    std::filesystem::remove_all(a);
    std::filesystem::remove_all(b);
    const int ea = harness::run_experiment(cfg, a).exit_code;
    const int eb = harness::run_experiment(cfg, b).exit_code;
    if (ea != 0 || eb != 0) {
      ok = false;
      detail += name + " exit " + std::to_string(ea) + "/" + std::to_string(eb) + "; ";
      continue;
    }
    for (const auto& entry : std::filesystem::recursive_directory_iterator(a)) {
      if (!entry.is_regular_file() || entry.path().extension() != ".csv") continue;
      const auto rel = std::filesystem::relative(entry.path(), a);
      ++files;
      const std::string fa = read_file(entry.path());
      if (fa.empty() || fa != read_file(b / rel)) {
        ok = false;
        detail += name + "/" + rel.string() + " differs; ";
      }
    }
  }
  detail += std::to_string(files) + " csv files compared";
  return finish("byte-identical reruns", ok, detail, timer);
}

CheckResult check_testbed_invariants() {
  Timer timer;
  auto beds = standard_testbeds();
  beds.push_back(std::make_shared<CauchyBilevel>(CauchyBilevel::Spec{}));
  std::mt19937_64 rng(777);
  bool ok = true;
  std::string detail;
  auto fail = [&](const std::string& what) {
    ok = false;
    detail += what + "; ";
  };
  for (const auto& tb : beds) {
    const std::string nm = tb->name();
    for (int rep = 0; rep < 3; ++rep) {
      const Vector x = random_point(*tb, rng);
      const Vector ys = tb->ystar(x);
      const double scale = 1.0 + tb->constants().L_g * ys.norm();
      if (tb->grad_y_g(x, ys).norm() > 1e-10 * scale) fail(nm + ": grad_y g(x, y*) != 0");
      if ((ys - newton_ystar(*tb, x, Vector::Zero(tb->dim_y()))).norm() > 1e-10 * (1 + ys.norm())) {
        fail(nm + ": y* differs from Newton solution");
      }
      BilevelOracle oracle = make_exact(tb);
      const Matrix J = implicit_jacobian(oracle, x, ys);
      const Matrix J_fd = fd_jacobian([&](const Vector& z) { return tb->ystar(z); }, x);
      if ((J - J_fd).norm() > 1e-6 * (1.0 + J_fd.norm())) fail(nm + ": implicit Jacobian");
      const Vector g = tb->composed_gradient(x);
      const Vector g_fd = fd_gradient([&](const Vector& z) { return tb->composed_value(z); }, x);
      if ((g - g_fd).norm() > 1e-6 * (1.0 + g_fd.norm())) fail(nm + ": composed gradient");
      if ((hypergradient(oracle, x, ys).grad - g).norm() > 1e-10 * (1.0 + g.norm())) {
        fail(nm + ": hypergradient at y* vs composed gradient");
      }
      const auto inner = gd_inner(oracle, x, Vector::Zero(tb->dim_y()), 20, ys);
      if ((inner.y_final - ys).norm() > *inner.theoretical_bound * (1 + 1e-12) + 1e-13) {
        fail(nm + ": gd_inner bound");
      }

      BilevelOracle exact = make_exact(tb);
      BilevelOracle zero = make_stochastic(tb, NoiseSpec{}, 5);
      const Vector y = ys + random_unit(tb->dim_y(), rng) * 0.3;
      const auto ge = exact.grad_f(x, y), gz = zero.grad_f(x, y);
      if (ge.x != gz.x || ge.y != gz.y || exact.grad_y_g(x, y) != zero.grad_y_g(x, y) ||
          exact.hess_xy_g(x, y) != zero.hess_xy_g(x, y) ||
          exact.hess_yy_g(x, y) != zero.hess_yy_g(x, y)) {
        fail(nm + ": zero-noise oracle differs from exact oracle");
      }

      StreamSeeds s1 = StreamSeeds::from_base(3);
      StreamSeeds s2 = s1;
      s2.xi ^= 0x9e3779b97f4a7c15ULL;
      const NoiseSpec noise = default_noise();
      BilevelOracle o1 = BilevelOracle::stochastic(tb, tb->constants(), noise, s1);
      BilevelOracle o2 = BilevelOracle::stochastic(tb, tb->constants(), noise, s2);
      bool same = true;
      for (int i = 0; i < 5; ++i) {
        o1.grad_f(x, y);
        o2.grad_f(x, y);
        same = same && o1.grad_y_g(x, y) == o2.grad_y_g(x, y) &&
               o1.hess_xy_g(x, y) == o2.hess_xy_g(x, y) && o1.hess_yy_g(x, y) == o2.hess_yy_g(x, y);
      }
      if (!same) fail(nm + ": xi seed changed zeta-driven samples");
    }
  }

  {
    const auto tb = harness::build_testbed(noisy_quadratic());
    BilevelOracle o = make_stochastic(tb, default_noise(), 12);
    const Vector x = Vector::Zero(2), y = Vector::Zero(2);
    for (int i = 0; i < 5000; ++i) o.hess_yy_g(x, y);
    const double frac = o.hessian_noise_stats().clamp_fraction();
    if (frac >= 0.01) fail("Hessian clamp fraction " + num(frac));
    detail += "clamp fraction " + num(frac) + "; ";

    NoiseSpec ny;
    ny.sigma_y = 0.5;
    BilevelOracle v = make_stochastic(tb, ny, 13);
    const Vector exact = tb->grad_y_f(x, y);
    const int draws = 100000;
    double acc = 0.0;
    for (int i = 0; i < draws; ++i) acc += (v.grad_f(x, y).y - exact).squaredNorm();
    const double var = acc / draws;
    const double target = 0.25 * tb->dim_y();
    if (std::abs(var - target) > 0.05 * target) fail("grad_y F variance " + num(var));
    detail += "grad_y F variance " + num(var) + " vs " + num(target) + "; ";
  }

  {
    RidgeHyperTune::Spec spec;
    auto ridge = std::make_shared<RidgeHyperTune>(spec);
    BilevelOracle o = make_exact(ridge);
    const Vector lam = Vector::Constant(1, spec.lambda_max);
    const Vector ys = ridge->ystar(lam);
    const auto r = gd_inner(o, lam, Vector::Zero(ridge->dim_y()), 2000);
    const double err = (r.y_final - ys).norm();
    if (err > 1e-8) fail("ridge gd_inner vs normal equations " + num(err));
    if (ridge->constants().mu_g < 2.0) fail("ridge mu_g < 2");
  }
  detail += std::to_string(beds.size()) + " testbeds";
  return finish("testbed and oracle invariants", ok, detail, timer);
}

CheckResult check_bound_soundness() {
  Timer timer;
  bool ok = true;
  std::string detail;
  const std::vector<std::pair<std::string, std::string>> exact_runs = {
      {"ba", "strongly_convex"}, {"ba", "convex"}, {"ba", "nonconvex"},
      {"aba", "strongly_convex"}, {"aba", "convex"}};
  for (const auto& [solver, cls] : exact_runs) {
    const json cfg = {{"testbed", noisy_quadratic()}, {"solver", solver}, {"class", cls},
                      {"N", 200}, {"feasible_set", "region"}, {"x0", {2.5, -2.5}}};
    const auto res = execute_json(cfg);
    if (!res.bound.available) {
      ok = false;
      detail += solver + "_" + cls + " bound unavailable; ";
      continue;
    }
    const bool grad_metric = cls == "nonconvex";
    int bad = 0;
    double worst = 0.0;
    for (const auto& r : res.runs.front().records) {
      const double b = res.bound.values[r.k];
      if (!std::isfinite(b)) continue;
      const double v = grad_metric ? r.grad_norm_sq : r.f_gap;
      worst = std::max(worst, v / b);
      if (v > b * (1.0 + 1e-12)) ++bad;
    }
    ok = ok && bad == 0;
    detail += res.bound.formula_id + " max ratio " + num(worst) + "; ";
  }
  for (const std::string cls : {"strongly_convex", "convex", "nonconvex"}) {
    const json cfg = {{"testbed", noisy_quadratic()}, {"solver", "bsa"}, {"class", cls},
                      {"N", 100}, {"feasible_set", "region"}, {"x0", {2.5, -2.5}},
                      {"noise", noise_json(default_noise())}, {"seed", 3}, {"seeds", 20}};
    const auto res = execute_json(cfg);
    if (!res.bound.available) {
      ok = false;
      detail += "bsa_" + cls + " bound unavailable; ";
      continue;
    }
    const auto& e = *res.ensemble;
    const bool grad_metric = cls == "nonconvex";
    int bad = 0;
    double worst = 0.0;
    for (std::size_t i = 0; i < e.k.size(); ++i) {
      const double b = res.bound.values[e.k[i]];
      if (!std::isfinite(b)) continue;
      const double m = grad_metric ? e.mean_grad_norm_sq[i] : e.mean_f_gap[i];
      const double se = grad_metric ? e.stderr_grad_norm_sq[i] : e.stderr_f_gap[i];
      worst = std::max(worst, m / b);
      if (m > b + 2.0 * se) ++bad;
    }
    ok = ok && bad == 0;
    detail += res.bound.formula_id + " max mean/bound " + num(worst) + "; ";
  }
  return finish("trace and bound soundness", ok, detail, timer);
}

std::vector<CheckResult> run_selftest(bool full, const std::filesystem::path& scratch) {
  std::vector<CheckResult> out;
  out.push_back(check_testbed_invariants());
  out.push_back(check_hypergradient_fd());
  out.push_back(check_hypergradient_error_bound());
  out.push_back(check_gd_contraction());
  out.push_back(check_hia_enumeration());
  out.push_back(check_ba_strongly_convex());
  out.push_back(check_counters());
  out.push_back(check_determinism(scratch));
  out.push_back(check_bound_soundness());
  if (full) {
    out.push_back(check_deterministic_rates());
    out.push_back(check_bsa_rates());
  }
  return out;
}

}  // namespace bilevel::verify
