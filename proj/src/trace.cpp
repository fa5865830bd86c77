#include "bilevel/trace.hpp"

#include <algorithm>
#include <cmath>

namespace bilevel {

MeanAndError mean_and_stderr(const std::vector<double>& values) {
  MeanAndError out;
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  for (double v : values) out.mean += v;
  out.mean /= n;
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.stderr_ = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return out;
}

EnsembleSummary summarize_ensemble(const std::vector<RunTrace>& traces) {
  EnsembleSummary s;
  s.runs = static_cast<int>(traces.size());
  if (traces.empty()) return s;
  const std::size_t len = traces.front().records.size();
  for (const auto& t : traces) {
    if (t.records.size() != len) throw ConfigError("ensemble traces differ in length");
  }
  std::vector<double> gap(traces.size()), grad(traces.size());
  for (std::size_t i = 0; i < len; ++i) {
    double gcf = 0.0, gcg = 0.0, hcg = 0.0;
    for (std::size_t r = 0; r < traces.size(); ++r) {
      const TraceRecord& rec = traces[r].records[i];
      gap[r] = rec.f_gap;
      grad[r] = rec.grad_norm_sq;
      gcf += static_cast<double>(rec.counters.gc_f);
      gcg += static_cast<double>(rec.counters.gc_g);
      hcg += static_cast<double>(rec.counters.hc_g);
    }
    const auto mg = mean_and_stderr(gap);
    const auto mn = mean_and_stderr(grad);
    const double n = static_cast<double>(traces.size());
    s.k.push_back(traces.front().records[i].k);
    s.mean_f_gap.push_back(mg.mean);
    s.stderr_f_gap.push_back(mg.stderr_);
    s.mean_grad_norm_sq.push_back(mn.mean);
    s.stderr_grad_norm_sq.push_back(mn.stderr_);
    s.mean_gc_f.push_back(gcf / n);
    s.mean_gc_g.push_back(gcg / n);
    s.mean_hc_g.push_back(hcg / n);
  }
  return s;
}

void apply_surrogate_gap(RunTrace& trace) {
  if (trace.records.empty()) return;
  double best = trace.records.front().f_value;
  for (const auto& r : trace.records) best = std::min(best, r.f_value);
  for (auto& r : trace.records) r.f_gap = r.f_gap_last = r.f_value - best;
  trace.gap_is_surrogate = true;
}

}  // namespace bilevel
