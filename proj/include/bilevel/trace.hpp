#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bilevel/oracle.hpp"

namespace bilevel {

/// State after k outer iterations (k = 1..N).
struct TraceRecord {
  int k = 0;
  Vector x;             ///< x_k (x^ag_k for the accelerated method)
  Vector x_output;      ///< the class's reported iterate after k steps
  double f_value = 0.0; ///< f(x_output; y*(x_output)), or f(x_k, ybar_k) without a reference
  double f_gap = 0.0;   ///< f_value - f*
  double f_gap_last = 0.0;  ///< gap at x_k itself (equals f_gap unless averaging)
  /// ||grad f(x_output)||^2, or for the nonconvex class
  /// mean_{j<k} ||grad f(x_j)||^2 (the expectation over the output index).
  double grad_norm_sq = 0.0;
  double inner_error = 0.0;  ///< ||ybar_k - y*(x)|| at the point the gradient was taken
  OracleCounters counters;
  std::optional<double> bound_value;
  int hia_depth = -1;  ///< p drawn at this step (stochastic method), else -1
  double wall_ms = 0.0;
};

struct RunTrace {
  std::vector<TraceRecord> records;
  Vector x_last;
  Vector x_average;                 ///< (1/N) sum_{k=1}^N x_k
  std::optional<Vector> x_weighted; ///< Gamma-weighted average
  std::optional<int> output_index;  ///< R for the nonconvex class
  Vector x_output;
  std::optional<double> f_star;
  /// True when no analytic reference exists and gaps are measured against the
  /// best observed value.
  bool gap_is_surrogate = false;
};

/// A numerical failure inside a solver loop, carrying the records completed
/// before it.
class RunFailure : public NumericalError {
 public:
  RunFailure(const std::string& what, RunTrace partial)
      : NumericalError(what), partial_(std::move(partial)) {}
  const RunTrace& partial() const { return partial_; }

 private:
  RunTrace partial_;
};

/// Per-k mean and standard error (sample std / sqrt(n)) across seeds.
struct EnsembleSummary {
  std::vector<int> k;
  std::vector<double> mean_f_gap;
  std::vector<double> stderr_f_gap;
  std::vector<double> mean_grad_norm_sq;
  std::vector<double> stderr_grad_norm_sq;
  std::vector<double> mean_gc_f;
  std::vector<double> mean_gc_g;
  std::vector<double> mean_hc_g;
  int runs = 0;
};

/// All traces must have equal length.
EnsembleSummary summarize_ensemble(const std::vector<RunTrace>& traces);

struct MeanAndError {
  double mean = 0.0;
  double stderr_ = 0.0;
};
MeanAndError mean_and_stderr(const std::vector<double>& values);

/// Replaces gaps of a reference-free trace by f - min_k f and flags it.
void apply_surrogate_gap(RunTrace& trace);

}  // namespace bilevel
