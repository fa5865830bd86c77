#include "bilevel/harness/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace bilevel::harness {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

double bound_at(const BoundCurve* bound, int k) {
  if (!bound || !bound->available || k < 0 ||
      static_cast<std::size_t>(k) >= bound->values.size()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return bound->values[static_cast<std::size_t>(k)];
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << fields[i];
  }
  out << '\n';
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_trace_csv(const std::filesystem::path& path, const RunTrace& trace,
                     const BoundCurve* bound, bool timing) {
  auto out = open_out(path);
  write_row(out, trace_columns());
  for (const auto& r : trace.records) {
    write_row(out, {std::to_string(r.k), std::to_string(r.counters.gc_f),
                    std::to_string(r.counters.gc_g), std::to_string(r.counters.hc_g),
                    format_number(r.f_gap), format_number(r.grad_norm_sq),
                    format_number(bound_at(bound, r.k)), format_number(timing ? r.wall_ms : 0.0)});
  }
}

void write_mean_trace_csv(const std::filesystem::path& path, const EnsembleSummary& s,
                          const BoundCurve* bound) {
  auto out = open_out(path);
  write_row(out, {"k", "mean_f_gap", "stderr_f_gap", "mean_grad_norm_sq", "stderr_grad_norm_sq",
                  "mean_cum_gc_f", "mean_cum_gc_g", "mean_cum_hc_g", "bound_value", "runs"});
  for (std::size_t i = 0; i < s.k.size(); ++i) {
    write_row(out, {std::to_string(s.k[i]), format_number(s.mean_f_gap[i]),
                    format_number(s.stderr_f_gap[i]), format_number(s.mean_grad_norm_sq[i]),
                    format_number(s.stderr_grad_norm_sq[i]), format_number(s.mean_gc_f[i]),
                    format_number(s.mean_gc_g[i]), format_number(s.mean_hc_g[i]),
                    format_number(bound_at(bound, s.k[i])), std::to_string(s.runs)});
  }
}

void write_bound_csv(const std::filesystem::path& path, const BoundCurve& bound) {
  auto out = open_out(path);
  write_row(out, {"k", "bound_value", "formula"});
  for (std::size_t k = 0; k < bound.values.size(); ++k) {
    if (std::isnan(bound.values[k])) continue;
    write_row(out, {std::to_string(k), format_number(bound.values[k]), bound.formula_id});
  }
}

std::vector<double> CsvTable::column(const std::string& name) const {
  std::size_t idx = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) idx = i;
  }
  if (idx == header.size()) throw ConfigError("no column named '" + name + "'");
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    if (idx >= row.size() || row[idx].empty()) {
      out.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    try {
      out.push_back(std::stod(row[idx]));
    } catch (const std::exception&) {
      throw ConfigError("non-numeric value '" + row[idx] + "' in column " + name);
    }
  }
  return out;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  CsvTable t;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> f;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(item);
    if (!s.empty() && s.back() == ',') f.emplace_back();
    return f;
  };
  if (!std::getline(in, line)) throw ConfigError(path.string() + " is empty");
  t.header = split(line);
  while (std::getline(in, line)) {
    if (!line.empty()) t.rows.push_back(split(line));
  }
  return t;
}

}  // namespace bilevel::harness
