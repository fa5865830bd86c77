#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace bilevel::verify {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

/// Hypergradient at the exact inner solution against finite differences of
/// the composed objective, over `pairs` random (testbed, x) draws.
CheckResult check_hypergradient_fd(int pairs = 100, double tol = 1e-6);

/// ||hypergradient(x, ybar) - grad f(x)|| <= C ||y*(x) - ybar|| on random
/// pairs; also reports the best ratio reached on Scalar1D.
CheckResult check_hypergradient_error_bound(int samples = 1000);

/// Per-step error ratio of gd_inner against (Q - 1) / (Q + 1) + 1e-12.
CheckResult check_gd_contraction(const std::vector<double>& condition_numbers = {1.0, 2.0, 10.0},
                                 int steps = 50);

/// Enumerated expectation of the Neumann estimator against the bias bound for
/// b = 1..b_max.
CheckResult check_hia_enumeration(const std::vector<double>& condition_numbers = {1.5, 2.0, 3.0},
                                  int b_max = 10);

/// BA strongly convex gap against its bound for k <= N, plus the Scalar1D
/// closed form x_k = (2/3)^k x_0.
CheckResult check_ba_strongly_convex(int N = 200);

/// Log-log slopes over [10, N] for BA convex, ABA convex and BA nonconvex.
CheckResult check_deterministic_rates(int N = 1000);

/// 20-seed BSA ensembles on noisy quadratics for all three classes.
CheckResult check_bsa_rates(int seeds = 20);

/// Counter identities on a set of runs and the GC(g) vs GC(f) exponent of
/// BA convex.
CheckResult check_counters();

/// Reruns configs through the experiment runner and compares trace files
/// byte for byte. Uses `scratch` for output.
CheckResult check_determinism(const std::filesystem::path& scratch);

/// Structural invariants of every testbed: stationarity of y*, implicit
/// Jacobian against finite differences, zero-noise oracle equality, stream
/// isolation and Hessian clamp frequency.
CheckResult check_testbed_invariants();

/// Trace/bound soundness on exact runs and ensemble bound checks.
CheckResult check_bound_soundness();

/// All checks; `full` adds the rate and ensemble checks.
std::vector<CheckResult> run_selftest(bool full, const std::filesystem::path& scratch);

}  // namespace bilevel::verify
