// bilevel: run experiments, fit convergence slopes, run the self-test suite.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bilevel/harness/config.hpp"
#include "bilevel/harness/csv.hpp"
#include "bilevel/harness/experiment.hpp"
#include "bilevel/harness/rate_fit.hpp"
#include "bilevel/verify/checks.hpp"

namespace {

using namespace bilevel;

int cmd_run(const std::string& config_path, const std::optional<std::uint64_t>& seed,
            const std::optional<std::string>& out) {
  harness::ExperimentConfig cfg;
  try {
    cfg = harness::load_config(config_path);
    if (seed) harness::override_seed(cfg, *seed);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }
  const std::filesystem::path dir = out ? *out : cfg.output_dir;
  const auto res = harness::run_experiment(cfg, dir);
  if (res.exit_code == 0) {
    std::cout << "wrote " << dir.string() << '\n';
  } else {
    std::cerr << (res.exit_code == 2 ? "config error: " : "numerical failure: ") << res.message
              << '\n';
  }
  return res.exit_code;
}

int cmd_fit(const std::string& trace, const std::string& column, const std::string& window) {
  try {
    const auto colon = window.find(':');
    if (colon == std::string::npos) throw ConfigError("window must be lo:hi");
    const double lo = std::stod(window.substr(0, colon));
    const double hi = std::stod(window.substr(colon + 1));
    const auto table = harness::read_csv(trace);
    const auto xs = table.column(table.header.front() == "N" ? "N" : "k");
    // mean_trace.csv and sweep.csv prefix their metric columns with "mean_".
    const bool plain = std::find(table.header.begin(), table.header.end(), column) != table.header.end();
    const auto fit = harness::fit_rate(xs, table.column(plain ? column : "mean_" + column), lo, hi);
    std::printf("slope %.10g\nintercept %.10g\nr_squared %.10g\nwindow %g:%g\npoints %d\n"
                "excluded %d\nsemilog_slope %.10g\nsemilog_r_squared %.10g\nsuper_polynomial %s\n",
                fit.slope, fit.intercept, fit.r_squared, fit.window_lo, fit.window_hi, fit.points,
                fit.excluded, fit.semilog_slope, fit.semilog_r_squared,
                fit.super_polynomial ? "true" : "false");
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "fit error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument&) {
    std::cerr << "fit error: window bounds must be numbers\n";
    return 2;
  }
}

int cmd_selftest(bool full, const std::string& scratch) {
  const auto results = bilevel::verify::run_selftest(full, scratch);
  int failed = 0;
  for (const auto& r : results) {
    std::printf("%s  %-40s %7.2fs  %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.seconds,
                r.detail.c_str());
    if (!r.passed) ++failed;
  }
  std::printf("%zu checks, %d failed\n", results.size(), failed);
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bilevel approximation solvers (BA, ABA, BSA)"};
  app.set_version_flag("--version", bilevel::harness::library_version());
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run an experiment from a JSON config");
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  run->add_option("--config", config, "Config file")->required();
  run->add_option("--seed", seed, "Override the base seed");
  run->add_option("--out", out, "Output directory (overrides output_dir)");

  auto* fit = app.add_subcommand("fit", "Fit a log-log slope to a trace column");
  std::string trace, column = "f_gap", window;
  fit->add_option("--trace", trace, "trace.csv, mean_trace.csv or sweep.csv")->required();
  fit->add_option("--column", column, "Column to fit");
  fit->add_option("--window", window, "Fit window lo:hi")->required();

  auto* self = app.add_subcommand("selftest", "Run the invariant suite");
  bool full = false;
  std::string scratch = (std::filesystem::temp_directory_path() / "bilevel_selftest").string();
  self->add_flag("--full", full, "Include the rate and ensemble checks (minutes)");
  self->add_option("--scratch", scratch, "Directory for rerun comparisons");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (*run) return cmd_run(config, seed, out);
  if (*fit) return cmd_fit(trace, column, window);
  return cmd_selftest(full, scratch);
}
