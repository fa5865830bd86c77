#include "bilevel/harness/experiment.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "bilevel/aba_solver.hpp"
#include "bilevel/ba_solver.hpp"
#include "bilevel/bsa_solver.hpp"
#include "bilevel/harness/csv.hpp"

#ifndef BILEVEL_VERSION
#define BILEVEL_VERSION "unknown"
#endif

namespace bilevel::harness {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Prepared {
  std::shared_ptr<Testbed> testbed;
  FeasibleSet X;
  Vector x0;
  Vector y0;
  SmoothnessConstants constants;
  std::optional<Vector> x_star;
  std::vector<std::string> warnings;
};

Vector vector_or(const std::vector<double>& v, const Vector& fallback, const char* what) {
  if (v.empty()) return fallback;
  if (static_cast<Eigen::Index>(v.size()) != fallback.size()) {
    throw ConfigError(std::string(what) + " has the wrong dimension");
  }
  return Eigen::Map<const Vector>(v.data(), fallback.size());
}

Prepared prepare(const ExperimentConfig& cfg) {
  Prepared p;
  p.testbed = build_testbed(cfg.testbed);
  p.X = build_feasible_set(cfg.feasible_set, *p.testbed);
  const int n = p.testbed->dim_x();
  const int m = p.testbed->dim_y();
  p.x0 = vector_or(cfg.x0, p.X.project(Vector::Zero(n)), "x0");
  p.y0 = vector_or(cfg.y0, Vector::Zero(m), "y0");
  p.constants = p.testbed->constants();
  p.constants.M_init = p.testbed->inner_radius(p.y0, p.X);
  if (p.X.bounded()) p.constants.D_X = p.X.diameter();
  try {
    p.x_star = p.testbed->x_star(p.X);
    p.constants.f_star = p.testbed->f_star(p.X);
  } catch (const ConfigError& e) {
    p.warnings.push_back(std::string("no reference optimum: ") + e.what());
  }
  return p;
}

struct SingleRun {
  RunTrace trace;
  std::int64_t expected_gc_g = 0;
  std::int64_t expected_hc_g = 0;
  HessianNoiseStats hessian_stats;
  SmoothnessConstants oracle_constants;
};

template <typename Sched>
void apply_overrides(const ExperimentConfig& cfg, Sched& s) {
  if (cfg.inner_steps) s.inner_steps.assign(s.inner_steps.size(), *cfg.inner_steps);
  s.cold_start = cfg.cold_start;
}

SingleRun run_single(const ExperimentConfig& cfg, const Prepared& p, int N, std::uint64_t seed) {
  SingleRun r;
  const Testbed* ref = p.x_star ? p.testbed.get() : nullptr;
  if (cfg.solver == "ba") {
    BilevelOracle oracle = BilevelOracle::exact(p.testbed, p.constants);
    ScheduleSpec s = ba_schedule(cfg.convexity, p.constants, N);
    apply_overrides(cfg, s);
    if (cfg.alpha) s.alpha.assign(s.alpha.size(), *cfg.alpha);
    s.index_seed = derive_seed(seed, "output_index");
    r.trace = ba_run(oracle, p.X, p.x0, p.y0, s, ref);
    r.expected_gc_g = std::accumulate(s.inner_steps.begin(), s.inner_steps.end(), std::int64_t{0});
    r.expected_hc_g = 2 * static_cast<std::int64_t>(N);
    r.oracle_constants = oracle.constants();
  } else if (cfg.solver == "aba") {
    if (cfg.alpha) throw ConfigError("aba derives lambda_k from alpha; alpha cannot be overridden");
    BilevelOracle oracle = BilevelOracle::exact(p.testbed, p.constants);
    AbaSchedule s = aba_schedule(cfg.convexity, p.constants, N);
    apply_overrides(cfg, s);
    r.trace = aba_run(oracle, p.X, p.x0, p.y0, s, ref);
    r.expected_gc_g = std::accumulate(s.inner_steps.begin(), s.inner_steps.end(), std::int64_t{0});
    r.expected_hc_g = 2 * static_cast<std::int64_t>(N);
    r.oracle_constants = oracle.constants();
  } else {
    BilevelOracle oracle = BilevelOracle::stochastic(p.testbed, p.constants, *cfg.noise,
                                                     StreamSeeds::from_base(seed));
    BsaSchedule s = bsa_schedule(cfg.convexity, oracle.constants(), N, cfg.exact_paper_schedule);
    apply_overrides(cfg, s);
    if (cfg.alpha) s.alpha.assign(s.alpha.size(), *cfg.alpha);
    if (cfg.hia_terms) s.hia_terms.assign(s.hia_terms.size(), *cfg.hia_terms);
    s.seeds = {seed};
    r.trace = bsa_run(oracle, p.X, p.x0, p.y0, s, seed, ref);
    r.expected_gc_g = std::accumulate(s.inner_steps.begin(), s.inner_steps.end(), std::int64_t{0});
    r.expected_hc_g = static_cast<std::int64_t>(N);
    for (const auto& rec : r.trace.records) r.expected_hc_g += rec.hia_depth;
    r.hessian_stats = oracle.hessian_noise_stats();
    r.oracle_constants = oracle.constants();
  }
  return r;
}

BoundInputs bound_inputs(const ExperimentConfig& cfg, const Prepared& p,
                         const SmoothnessConstants& oracle_constants) {
  BoundInputs in;
  in.solver = cfg.solver;
  in.convexity = cfg.convexity;
  in.constants = oracle_constants;
  in.constants.M_init = p.constants.M_init;
  in.constants.D_X = p.constants.D_X;
  in.constants.f_star = p.constants.f_star;
  if (p.x_star && p.constants.f_star) {
    in.initial_gap = p.testbed->composed_value(p.x0) - *p.constants.f_star;
    in.initial_dist = (p.x0 - *p.x_star).norm();
  }
  if (cfg.noise) in.noise = *cfg.noise;
  in.dim_x = p.testbed->dim_x();
  in.dim_y = p.testbed->dim_y();
  return in;
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json fit_json(const SlopeFit& f) {
  return {{"slope", f.slope},
          {"intercept", f.intercept},
          {"r_squared", f.r_squared},
          {"window", {f.window_lo, f.window_hi}},
          {"points", f.points},
          {"excluded", f.excluded},
          {"semilog_slope", f.semilog_slope},
          {"semilog_r_squared", f.semilog_r_squared},
          {"super_polynomial", f.super_polynomial}};
}

json try_fit(const std::vector<double>& k, const std::vector<double>& v, double lo, double hi,
             std::vector<std::string>& warnings, const std::string& what) {
  try {
    return fit_json(fit_rate(k, v, lo, hi));
  } catch (const ConfigError& e) {
    warnings.push_back(what + " fit skipped: " + e.what());
    return nullptr;
  }
}

json constants_json(const SmoothnessConstants& c) {
  const DerivedConstants d = derived_constants(c);
  auto opt = [](const std::optional<double>& v) { return v ? number(*v) : json(nullptr); };
  return {{"mu_g", c.mu_g},        {"L_g", c.L_g},           {"mu_f", c.mu_f},
          {"L_fx", c.L_fx},        {"L_fy", c.L_fy},         {"Lbar_fy", c.Lbar_fy},
          {"Lbar_fx", c.Lbar_fx},  {"C_fy", number(c.C_fy)}, {"L_gxy", c.L_gxy},
          {"L_gyy", c.L_gyy},      {"Lbar_gxy", c.Lbar_gxy}, {"Lbar_gyy", c.Lbar_gyy},
          {"C_gxy", c.C_gxy},      {"C_fx", opt(c.C_fx)},    {"M_init", opt(c.M_init)},
          {"D_X", opt(c.D_X)},     {"f_star", opt(c.f_star)}, {"C", number(d.C)},
          {"L_f", number(d.L_f)},  {"Q_g", d.Q_g}};
}

std::pair<double, double> default_window(const ExperimentConfig& cfg, double hi) {
  if (cfg.fit_window) return *cfg.fit_window;
  return {hi >= 20.0 ? 10.0 : 1.0, hi};
}

}  // namespace

const char* library_version() { return BILEVEL_VERSION; }

std::vector<SweepPoint> sweep_over_N(const ExperimentConfig& cfg, const std::vector<int>& Ns) {
  const Prepared p = prepare(cfg);
  std::vector<SweepPoint> out;
  for (int N : Ns) {
    std::vector<RunTrace> runs;
    SmoothnessConstants oc = p.constants;
    for (std::uint64_t seed : cfg.seeds) {
      SingleRun r = run_single(cfg, p, N, seed);
      oc = r.oracle_constants;
      runs.push_back(std::move(r.trace));
    }
    SweepPoint pt;
    for (const auto& r : runs) {
      pt.f_gap_per_seed.push_back(r.records.back().f_gap);
      pt.grad_norm_sq_per_seed.push_back(r.records.back().grad_norm_sq);
    }
    const EnsembleSummary s = summarize_ensemble(runs);
    pt.N = N;
    const std::size_t last = s.k.size() - 1;
    pt.mean_f_gap = s.mean_f_gap[last];
    pt.stderr_f_gap = s.stderr_f_gap[last];
    pt.mean_grad_norm_sq = s.mean_grad_norm_sq[last];
    pt.stderr_grad_norm_sq = s.stderr_grad_norm_sq[last];
    pt.mean_gc_f = s.mean_gc_f[last];
    pt.mean_gc_g = s.mean_gc_g[last];
    pt.mean_hc_g = s.mean_hc_g[last];
    const BoundCurve bc = bound_curve(bound_inputs(cfg, p, oc), N);
    pt.bound_value = bc.available ? bc.values.back() : kNaN;
    out.push_back(pt);
  }
  return out;
}

ExperimentResult execute(const ExperimentConfig& cfg) {
  ExperimentResult res;
  const Prepared p = prepare(cfg);
  res.seeds = cfg.seeds;
  std::vector<std::string> warnings = p.warnings;

  json counters = json::array();
  HessianNoiseStats pooled;
  SmoothnessConstants oc = p.constants;
  for (std::uint64_t seed : cfg.seeds) {
    SingleRun r = run_single(cfg, p, cfg.N, seed);
    const OracleCounters& got = r.trace.records.back().counters;
    counters.push_back({{"seed", seed},
                        {"gc_f", got.gc_f},
                        {"gc_g", got.gc_g},
                        {"hc_g", got.hc_g},
                        {"expected_gc_f", cfg.N},
                        {"expected_gc_g", r.expected_gc_g},
                        {"expected_hc_g", r.expected_hc_g},
                        {"exact", got.gc_f == cfg.N && got.gc_g == r.expected_gc_g &&
                                      got.hc_g == r.expected_hc_g}});
    pooled.samples += r.hessian_stats.samples;
    pooled.clamped += r.hessian_stats.clamped;
    oc = r.oracle_constants;
    res.runs.push_back(std::move(r.trace));
  }

  const BoundInputs bin = bound_inputs(cfg, p, oc);
  res.bound = bound_curve(bin, cfg.N);
  for (const auto& w : res.bound.warnings) warnings.push_back(w);

  std::vector<double> ks, gaps, grads;
  if (cfg.seeds.size() > 1) {
    res.ensemble = summarize_ensemble(res.runs);
    ks.assign(res.ensemble->k.begin(), res.ensemble->k.end());
    gaps = res.ensemble->mean_f_gap;
    grads = res.ensemble->mean_grad_norm_sq;
  } else {
    for (const auto& r : res.runs.front().records) {
      ks.push_back(r.k);
      gaps.push_back(r.f_gap);
      grads.push_back(r.grad_norm_sq);
    }
  }
  const auto [lo, hi] = default_window(cfg, static_cast<double>(cfg.N));
  json fits = {{"f_gap", try_fit(ks, gaps, lo, hi, warnings, "f_gap")},
               {"grad_norm_sq", try_fit(ks, grads, lo, hi, warnings, "grad_norm_sq")}};

  json sweep = nullptr;
  if (!cfg.sweep_N.empty()) {
    res.sweep = sweep_over_N(cfg, cfg.sweep_N);
    std::vector<double> sn, sg, sq;
    for (const auto& pt : res.sweep) {
      sn.push_back(pt.N);
      sg.push_back(pt.mean_f_gap);
      sq.push_back(pt.mean_grad_norm_sq);
    }
    const double slo = cfg.fit_window ? cfg.fit_window->first : sn.front();
    const double shi = cfg.fit_window ? cfg.fit_window->second : sn.back();
    sweep = {{"N", cfg.sweep_N},
             {"f_gap", try_fit(sn, sg, slo, shi, warnings, "sweep f_gap")},
             {"grad_norm_sq", try_fit(sn, sq, slo, shi, warnings, "sweep grad_norm_sq")}};
  }

  const RunTrace& first = res.runs.front();
  const TraceRecord& fin = first.records.back();
  json final_metrics = {{"k", fin.k},
                        {"f_gap", number(res.ensemble ? gaps.back() : fin.f_gap)},
                        {"f_gap_last", number(fin.f_gap_last)},
                        {"grad_norm_sq", number(res.ensemble ? grads.back() : fin.grad_norm_sq)},
                        {"x_output", std::vector<double>(first.x_output.data(),
                                                         first.x_output.data() + first.x_output.size())}};
  if (first.output_index) final_metrics["output_index"] = *first.output_index;
  if (res.ensemble) {
    final_metrics["stderr_f_gap"] = number(res.ensemble->stderr_f_gap.back());
    final_metrics["stderr_grad_norm_sq"] = number(res.ensemble->stderr_grad_norm_sq.back());
  }

  res.summary = {
      {"schema", "bilevel.summary/1"},
      {"library_version", library_version()},
      {"status", "ok"},
      {"config", cfg.raw},
      {"solver", cfg.solver},
      {"class", to_string(cfg.convexity)},
      {"N", cfg.N},
      {"seeds", cfg.seeds},
      {"testbed", p.testbed->name()},
      {"constants", constants_json(oc)},
      {"final", final_metrics},
      {"counters", counters},
      {"bound",
       {{"formula", res.bound.formula_id},
        {"available", res.bound.available},
        {"final", res.bound.available ? number(res.bound.values.back()) : json(nullptr)}}},
      {"fits", fits},
      {"sweep", sweep},
      {"gap_is_surrogate", first.gap_is_surrogate},
      {"hessian_clamp_fraction", pooled.clamp_fraction()},
      {"hessian_samples", pooled.samples},
      {"warnings", warnings}};
  return res;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  ExperimentResult res;
  auto write_summary = [&](const json& j) {
    std::ofstream out(out_dir / "summary.json", std::ios::binary | std::ios::trunc);
    out << j.dump(2) << '\n';
  };
  try {
    std::filesystem::create_directories(out_dir);
  } catch (const std::filesystem::filesystem_error& e) {
    res.exit_code = 2;
    res.message = e.what();
    return res;
  }
  try {
    res = execute(cfg);
    const BoundCurve* bound = res.bound.available ? &res.bound : nullptr;
    if (res.runs.size() == 1) {
      write_trace_csv(out_dir / "trace.csv", res.runs.front(), bound, cfg.timing);
    } else {
      for (std::size_t i = 0; i < res.runs.size(); ++i) {
        const auto dir = out_dir / ("seed_" + std::to_string(res.seeds[i]));
        std::filesystem::create_directories(dir);
        write_trace_csv(dir / "trace.csv", res.runs[i], bound, cfg.timing);
      }
      write_mean_trace_csv(out_dir / "mean_trace.csv", *res.ensemble, bound);
    }
    if (res.bound.available) write_bound_csv(out_dir / "bound.csv", res.bound);
    if (!res.sweep.empty()) {
      std::ofstream out(out_dir / "sweep.csv", std::ios::binary | std::ios::trunc);
      out << "N,mean_f_gap,stderr_f_gap,mean_grad_norm_sq,stderr_grad_norm_sq,mean_cum_gc_f,"
             "mean_cum_gc_g,mean_cum_hc_g,bound_value\n";
      for (const auto& pt : res.sweep) {
        out << pt.N << ',' << format_number(pt.mean_f_gap) << ',' << format_number(pt.stderr_f_gap)
            << ',' << format_number(pt.mean_grad_norm_sq) << ','
            << format_number(pt.stderr_grad_norm_sq) << ',' << format_number(pt.mean_gc_f) << ','
            << format_number(pt.mean_gc_g) << ',' << format_number(pt.mean_hc_g) << ','
            << format_number(pt.bound_value) << '\n';
      }
    }
    write_summary(res.summary);
    res.message = "ok";
  } catch (const RunFailure& e) {
    res.exit_code = 3;
    res.message = e.what();
    write_trace_csv(out_dir / "trace.csv", e.partial(), nullptr, cfg.timing);
    write_summary({{"schema", "bilevel.summary/1"},
                   {"library_version", library_version()},
                   {"status", "numerical_failure"},
                   {"error", e.what()},
                   {"completed_iterations", e.partial().records.size()},
                   {"config", cfg.raw}});
  } catch (const NumericalError& e) {
    res.exit_code = 3;
    res.message = e.what();
  } catch (const ConfigError& e) {
    res.exit_code = 2;
    res.message = e.what();
  }
  return res;
}

}  // namespace bilevel::harness
