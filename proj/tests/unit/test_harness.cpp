#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "bilevel/harness/bounds.hpp"
#include "bilevel/harness/config.hpp"
#include "bilevel/harness/csv.hpp"
#include "bilevel/harness/experiment.hpp"
#include "bilevel/harness/rate_fit.hpp"
#include "bilevel/testbeds.hpp"

using namespace bilevel;
using namespace bilevel::harness;
using nlohmann::json;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / "bilevel_test_harness" / name;
  std::filesystem::remove_all(p);
  return p;
}

json scalar_cfg() {
  return {{"testbed", {{"kind", "scalar1d"}}}, {"solver", "ba"}, {"class", "strongly_convex"},
          {"N", 3}, {"x0", {1.0}}};
}

json noisy_cfg(int seeds) {
  return {{"testbed",
           {{"kind", "quadratic"},
            {"inner_spectrum", {1.0, 2.0}},
            {"outer_spectrum", {1.0, 2.0}},
            {"seed", 23},
            {"region", {{"kind", "box"}, {"lower", {-3, -3}}, {"upper", {3, 3}}}}}},
          {"solver", "bsa"},
          {"class", "strongly_convex"},
          {"N", 30},
          {"feasible_set", "region"},
          {"x0", {2.0, 2.0}},
          {"noise", {{"sigma_x", 0.1}, {"sigma_y", 0.1}, {"sigma_gy", 0.1}, {"sigma_gxy", 0.05},
                     {"sigma_gyy", 0.05}}},
          {"seed", 1},
          {"seeds", seeds}};
}

}  // namespace

TEST_CASE("fit_rate on exact power laws") {
  std::vector<double> N, g1, g2;
  for (int n = 1; n <= 200; ++n) {
    N.push_back(n);
    g1.push_back(1.0 / n);
    g2.push_back(1.0 / (double(n) * n));
  }
  const auto f1 = fit_rate(N, g1, 10, 200);
  CHECK(std::abs(f1.slope + 1.0) < 1e-9);
  CHECK(f1.r_squared == doctest::Approx(1.0));
  CHECK(f1.points == 191);
  CHECK(std::abs(fit_rate(N, g2, 10, 200).slope + 2.0) < 1e-9);
  CHECK_FALSE(f1.super_polynomial);
}

TEST_CASE("fit_rate flags geometric sequences as super-polynomial") {
  std::vector<double> k, g;
  for (int i = 1; i <= 40; ++i) {
    k.push_back(i);
    g.push_back(std::pow(4.0 / 9.0, i));
  }
  const auto f = fit_rate(k, g, 1, 40);
  CHECK(f.super_polynomial);
  CHECK(f.semilog_slope == doctest::Approx(std::log(4.0 / 9.0)).epsilon(1e-10));
  CHECK(f.semilog_r_squared > f.r_squared);
}

TEST_CASE("fit_rate excludes nonpositive gaps and reports them") {
  const std::vector<double> k = {1, 2, 3, 4, 5}, g = {1.0, 0.5, 0.0, -1.0, 0.2};
  const auto f = fit_rate(k, g, 1, 5);
  CHECK(f.excluded == 2);
  CHECK(f.points == 3);
  CHECK(f.r_squared >= 0.0);
  CHECK(f.r_squared <= 1.0);
  CHECK_THROWS_AS(fit_rate(k, {0, 0, 0, 0, 1}, 1, 5), ConfigError);
  CHECK_THROWS_AS(fit_rate(k, g, 5, 1), ConfigError);
}

TEST_CASE("Scalar1D strongly convex bound") {
  BoundInputs in;
  in.solver = "ba";
  in.convexity = ConvexityClass::strongly_convex;
  in.constants = make_scalar1d()->constants();
  in.initial_gap = 2.0;
  in.initial_dist = 1.0;
  const auto b = bound_curve(in, 5);
  REQUIRE(b.available);
  CHECK(b.formula_id == "ba_strongly_convex");
  CHECK(b.values[0] == 2.0);
  CHECK(b.values[5] == doctest::Approx(std::pow(2.0 / 3.0, 5) * 2.0).epsilon(1e-14));
  CHECK(bound_curve(in, 0).values.at(0) == 2.0);
}

TEST_CASE("convex bound without D_X is omitted with a warning") {
  BoundInputs in;
  in.solver = "ba";
  in.convexity = ConvexityClass::convex;
  in.constants = make_scalar1d()->constants();
  in.initial_gap = 2.0;
  const auto b = bound_curve(in, 10);
  CHECK_FALSE(b.available);
  CHECK_FALSE(b.warnings.empty());
}

TEST_CASE("config validation") {
  CHECK_NOTHROW(parse_config(scalar_cfg()));
  json j = scalar_cfg();
  j["solver"] = "aba";
  j["class"] = "nonconvex";
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j = scalar_cfg();
  j["solver"] = "bsa";
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j = scalar_cfg();
  j["stepsize"] = 0.1;
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j = scalar_cfg();
  j["N"] = 0;
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j = scalar_cfg();
  j["schedule"] = {{"hia_terms", 3}};
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  CHECK_THROWS_AS(build_testbed({{"kind", "lasso"}}), ConfigError);
  j = scalar_cfg();
  j["testbed"] = {{"kind", "lasso"}};
  CHECK(run_experiment(parse_config(j), scratch("lasso")).exit_code == 2);
  const auto e = parse_config(noisy_cfg(4));
  CHECK(e.seeds == std::vector<std::uint64_t>{1, 2, 3, 4});
  auto o = e;
  override_seed(o, 10);
  CHECK(o.seeds == std::vector<std::uint64_t>{10, 11, 12, 13});
}

TEST_CASE("Scalar1D BA run writes 3 rows ending at cum_gc_g = 6") {
  const auto dir = scratch("scalar");
  const auto res = run_experiment(parse_config(scalar_cfg()), dir);
  REQUIRE(res.exit_code == 0);
  const auto t = read_csv(dir / "trace.csv");
  CHECK(t.header == trace_columns());
  REQUIRE(t.rows.size() == 3);
  CHECK(t.column("cum_gc_g").back() == 6.0);
  CHECK(t.column("cum_gc_f").back() == 3.0);
  CHECK(t.column("cum_hc_g").back() == 6.0);
  const auto gap = t.column("f_gap"), bound = t.column("bound_value");
  for (std::size_t i = 0; i < gap.size(); ++i) CHECK(gap[i] <= bound[i]);
  std::ifstream in(dir / "summary.json");
  const json s = json::parse(in);
  CHECK(s.at("schema") == "bilevel.summary/1");
  CHECK(s.at("counters")[0].at("exact") == true);
  CHECK(s.at("config") == scalar_cfg());
  CHECK(s.at("library_version").is_string());
}

TEST_CASE("same config twice gives byte-identical traces") {
  const auto a = scratch("det_a"), b = scratch("det_b");
  const auto cfg = parse_config(noisy_cfg(3));
  REQUIRE(run_experiment(cfg, a).exit_code == 0);
  REQUIRE(run_experiment(cfg, b).exit_code == 0);
  for (const char* f : {"seed_1/trace.csv", "seed_2/trace.csv", "seed_3/trace.csv", "mean_trace.csv"}) {
    std::ifstream fa(a / f), fb(b / f);
    const std::string sa((std::istreambuf_iterator<char>(fa)), {});
    const std::string sb((std::istreambuf_iterator<char>(fb)), {});
    CHECK(!sa.empty());
    CHECK(sa == sb);
  }
}

TEST_CASE("20-seed ensemble: stderr column is the sample std / sqrt(20)") {
  const auto dir = scratch("ens");
  const auto res = run_experiment(parse_config(noisy_cfg(20)), dir);
  REQUIRE(res.exit_code == 0);
  const auto mean = read_csv(dir / "mean_trace.csv");
  std::vector<std::vector<double>> gaps;
  for (int s = 1; s <= 20; ++s) {
    gaps.push_back(read_csv(dir / ("seed_" + std::to_string(s)) / "trace.csv").column("f_gap"));
  }
  const auto m = mean.column("mean_f_gap"), se = mean.column("stderr_f_gap");
  for (std::size_t k = 0; k < m.size(); ++k) {
    double mu = 0.0;
    for (const auto& g : gaps) mu += g[k] / 20.0;
    double ss = 0.0;
    for (const auto& g : gaps) ss += (g[k] - mu) * (g[k] - mu);
    CHECK(m[k] == doctest::Approx(mu).epsilon(1e-12));
    CHECK(se[k] == doctest::Approx(std::sqrt(ss / 19.0) / std::sqrt(20.0)).epsilon(1e-10));
  }
}

TEST_CASE("csv numbers round-trip exactly") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.123, -2.5}) {
    CHECK(std::stod(format_number(v)) == v);
  }
  CHECK(format_number(std::nan("")) == "");
}

TEST_CASE("sweep over N returns one point per budget") {
  json j = noisy_cfg(3);
  j["class"] = "convex";
  const auto sweep = sweep_over_N(parse_config(j), {5, 10, 20});
  REQUIRE(sweep.size() == 3);
  CHECK(sweep[2].N == 20);
  CHECK(sweep[1].f_gap_per_seed.size() == 3);
  CHECK(std::isfinite(sweep[2].bound_value));
}

TEST_CASE("numerical failure returns exit 3") {
  json j = scalar_cfg();
  j["class"] = "convex";
  j["schedule"] = {{"alpha", 1e300}};
  j["N"] = 5;
  const auto dir = scratch("fail");
  const auto res = run_experiment(parse_config(j), dir);
  CHECK(res.exit_code == 3);
  CHECK(std::filesystem::exists(dir / "trace.csv"));
}
