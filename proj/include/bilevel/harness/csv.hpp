#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bilevel/harness/bounds.hpp"
#include "bilevel/trace.hpp"

namespace bilevel::harness {

inline const std::vector<std::string>& trace_columns() {
  static const std::vector<std::string> cols{"k",     "cum_gc_f",     "cum_gc_g",    "cum_hc_g",
                                             "f_gap", "grad_norm_sq", "bound_value", "wall_ms"};
  return cols;
}

/// Shortest round-trip representation; NaN becomes an empty field.
std::string format_number(double v);

void write_trace_csv(const std::filesystem::path& path, const RunTrace& trace,
                     const BoundCurve* bound, bool timing);
void write_mean_trace_csv(const std::filesystem::path& path, const EnsembleSummary& summary,
                          const BoundCurve* bound);
void write_bound_csv(const std::filesystem::path& path, const BoundCurve& bound);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Numeric column by name (empty fields become NaN). Throws ConfigError.
  std::vector<double> column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

}  // namespace bilevel::harness
