#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "bilevel/feasible_set.hpp"
#include "bilevel/oracle.hpp"
#include "bilevel/schedule.hpp"
#include "bilevel/testbeds.hpp"
#include "bilevel/trace.hpp"

namespace bilevel {

struct StochasticHypergrad {
  Vector grad;
  int p_used = 0;
  int b = 1;
  /// Draw counts consumed per stream: xi, zeta_grad (none here), zeta_cross,
  /// zeta_hess.
  int xi_draws = 0;
  int cross_draws = 0;
  int hess_draws = 0;
};

/// grad_x F - hess_xy G * [HIA(b) applied to grad_y F], all from independent
/// samples. gc_f += 1, hc_g += 1 + p.
StochasticHypergrad stochastic_hypergradient(BilevelOracle& oracle, const Vector& x,
                                             const Vector& ybar, int b, RngStream& truncation);

/// One seed of the bilevel stochastic approximation method. `seed` drives the
/// algorithm's own streams (HIA truncation depth, output index); the oracle
/// owns its noise streams.
RunTrace bsa_run(BilevelOracle& oracle, const FeasibleSet& set, const Vector& x0,
                 const Vector& y0, const BsaSchedule& sched, std::uint64_t seed,
                 const Testbed* reference = nullptr);

struct BsaEnsemble {
  std::vector<RunTrace> runs;
  EnsembleSummary summary;
};

/// Runs one oracle per seed (from `make_oracle(seed)`) over sched.seeds.
BsaEnsemble bsa_ensemble(const std::function<BilevelOracle(std::uint64_t)>& make_oracle,
                         const FeasibleSet& set, const Vector& x0, const Vector& y0,
                         const BsaSchedule& sched, const Testbed* reference = nullptr);

}  // namespace bilevel
