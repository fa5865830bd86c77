#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bilevel/feasible_set.hpp"
#include "bilevel/oracle.hpp"
#include "bilevel/testbeds.hpp"

namespace bilevel::harness {

/// One experiment, parsed from JSON. See README.md for the schema.
struct ExperimentConfig {
  nlohmann::json testbed;  ///< {"kind": ..., kind-specific parameters}
  std::string solver;      ///< ba | aba | bsa
  ConvexityClass convexity = ConvexityClass::convex;
  int N = 0;
  /// Absent: all space. The string "region" selects the testbed's region.
  nlohmann::json feasible_set;
  std::vector<double> x0;  ///< empty: projection of 0 onto X
  std::vector<double> y0;  ///< empty: 0
  std::optional<NoiseSpec> noise;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds;  ///< ensemble seeds; empty: {seed}
  bool cold_start = false;
  bool exact_paper_schedule = false;
  /// Write measured wall-clock times to trace.csv (otherwise 0, which keeps
  /// reruns byte-identical).
  bool timing = false;
  std::optional<double> alpha;
  std::optional<int> inner_steps;
  std::optional<int> hia_terms;
  std::vector<int> sweep_N;
  std::optional<std::pair<double, double>> fit_window;
  std::string output_dir = "out";
  nlohmann::json raw;

  bool is_ensemble() const { return solver == "bsa"; }
};

/// Throws ConfigError on unknown keys, bad types or invalid combinations.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Replaces the base seed; an ensemble given by count is re-derived from it.
void override_seed(ExperimentConfig& cfg, std::uint64_t seed);

std::shared_ptr<Testbed> build_testbed(const nlohmann::json& spec);
FeasibleSet build_feasible_set(const nlohmann::json& spec, const Testbed& testbed);
FeasibleSet parse_set(const nlohmann::json& spec);

}  // namespace bilevel::harness
