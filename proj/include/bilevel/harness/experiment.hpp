#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bilevel/harness/bounds.hpp"
#include "bilevel/harness/config.hpp"
#include "bilevel/harness/rate_fit.hpp"
#include "bilevel/trace.hpp"

namespace bilevel::harness {

struct SweepPoint {
  int N = 0;
  double mean_f_gap = 0.0;
  double stderr_f_gap = 0.0;
  double mean_grad_norm_sq = 0.0;
  double stderr_grad_norm_sq = 0.0;
  double mean_gc_f = 0.0;
  double mean_gc_g = 0.0;
  double mean_hc_g = 0.0;
  double bound_value = 0.0;  ///< NaN when unavailable
  std::vector<double> f_gap_per_seed;
  std::vector<double> grad_norm_sq_per_seed;
};

struct ExperimentResult {
  int exit_code = 0;  ///< 0 ok, 2 config error, 3 numerical failure
  std::string message;
  std::vector<std::uint64_t> seeds;
  std::vector<RunTrace> runs;
  std::optional<EnsembleSummary> ensemble;
  BoundCurve bound;
  std::vector<SweepPoint> sweep;
  nlohmann::json summary;
};

const char* library_version();

/// Executes the configured runs in memory (no files).
ExperimentResult execute(const ExperimentConfig& cfg);

/// execute() plus trace.csv / mean_trace.csv / bound.csv / sweep.csv /
/// summary.json under `out_dir`. Never throws for config or numerical
/// errors; they are reported through exit_code.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

/// Final-iterate ensemble metrics for each N (one ensemble per N, since the
/// stochastic convex and nonconvex step sizes depend on N).
std::vector<SweepPoint> sweep_over_N(const ExperimentConfig& cfg, const std::vector<int>& Ns);

}  // namespace bilevel::harness
