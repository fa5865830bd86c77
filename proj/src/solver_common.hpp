#pragma once

#include <chrono>
#include <cmath>
#include <string>

#include "bilevel/feasible_set.hpp"
#include "bilevel/testbeds.hpp"
#include "bilevel/trace.hpp"

namespace bilevel::detail {

inline void check_start(const FeasibleSet& set, const Vector& x0, int n, const Vector& y0, int m) {
  if (x0.size() != n) throw ConfigError("x0 has the wrong dimension");
  if (y0.size() != m) throw ConfigError("y0 has the wrong dimension");
  if (!set.contains(x0, 1e-9)) throw ConfigError("x0 must lie in the feasible set");
}

template <typename Seq>
void check_length(const Seq& seq, int N, const std::string& what) {
  if (static_cast<int>(seq.size()) != N) throw ConfigError(what + " length differs from N");
}

/// Fills the reference-dependent fields of a record.
inline void fill_metrics(TraceRecord& rec, const Testbed* ref, double f_star,
                         const Vector& x_k, double fallback_value) {
  if (ref) {
    rec.f_value = ref->composed_value(rec.x_output);
    rec.f_gap = rec.f_value - f_star;
    rec.f_gap_last = ref->composed_value(x_k) - f_star;
  } else {
    rec.f_value = fallback_value;
    rec.f_gap = rec.f_gap_last = 0.0;
  }
}

/// Throws NumericalError once an iterate, the inner state or the objective
/// value stops being finite. The failing record is not kept.
inline void check_finite(const TraceRecord& rec, const Vector& y) {
  if (!rec.x.allFinite() || !rec.x_output.allFinite() || !y.allFinite() ||
      !std::isfinite(rec.f_value)) {
    throw NumericalError("non-finite iterate at step " + std::to_string(rec.k));
  }
}

class Stopwatch {
 public:
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace bilevel::detail
