#include "bilevel/harness/config.hpp"

#include <fstream>
#include <set>

namespace bilevel::harness {

using nlohmann::json;

namespace {

void only_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("key '") + key + "' has the wrong type");
  }
}

std::vector<double> doubles(const json& j, const char* key) {
  return get_or<std::vector<double>>(j, key, {});
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

FeasibleSet parse_set(const json& spec) {
  if (spec.is_null()) return FeasibleSet::all_space();
  only_keys(spec, {"kind", "lower", "upper", "center", "radius"}, "feasible set");
  const auto kind = get_or<std::string>(spec, "kind", "all_space");
  if (kind == "all_space") return FeasibleSet::all_space();
  if (kind == "box") {
    return FeasibleSet::box(to_vector(doubles(spec, "lower")), to_vector(doubles(spec, "upper")));
  }
  if (kind == "ball") {
    return FeasibleSet::ball(to_vector(doubles(spec, "center")), get_or(spec, "radius", 0.0));
  }
  throw ConfigError("unknown feasible set kind '" + kind + "'");
}

FeasibleSet build_feasible_set(const json& spec, const Testbed& testbed) {
  if (spec.is_string()) {
    if (spec.get<std::string>() == "region") return testbed.region();
    throw ConfigError("feasible_set string must be \"region\"");
  }
  return parse_set(spec);
}

std::shared_ptr<Testbed> build_testbed(const json& spec) {
  if (!spec.is_object()) throw ConfigError("testbed must be an object");
  const auto kind = get_or<std::string>(spec, "kind", "");
  if (kind == "scalar1d") {
    only_keys(spec, {"kind"}, "scalar1d testbed");
    return make_scalar1d();
  }
  if (kind == "quadratic") {
    only_keys(spec,
              {"kind", "inner_spectrum", "outer_spectrum", "coupling_weight", "seed", "x_star",
               "region"},
              "quadratic testbed");
    QuadraticSpectraSpec s;
    s.inner_spectrum = doubles(spec, "inner_spectrum");
    s.outer_spectrum = doubles(spec, "outer_spectrum");
    s.coupling_weight = get_or(spec, "coupling_weight", s.coupling_weight);
    s.seed = get_or<std::uint64_t>(spec, "seed", s.seed);
    s.x_star = doubles(spec, "x_star");
    if (spec.contains("region")) s.region = parse_set(spec.at("region"));
    return make_quadratic_from_spectra(s);
  }
  if (kind == "stackelberg") {
    only_keys(spec, {"kind", "leaders", "followers", "demand_intercept", "demand_slope", "seed",
                     "region"},
              "stackelberg testbed");
    StackelbergSpec s;
    s.leaders = get_or(spec, "leaders", s.leaders);
    s.followers = get_or(spec, "followers", s.followers);
    s.demand_intercept = get_or(spec, "demand_intercept", s.demand_intercept);
    s.demand_slope = get_or(spec, "demand_slope", s.demand_slope);
    s.seed = get_or<std::uint64_t>(spec, "seed", s.seed);
    if (spec.contains("region")) s.region = parse_set(spec.at("region"));
    return make_stackelberg(s);
  }
  if (kind == "ridge") {
    only_keys(spec, {"kind", "train_rows", "val_rows", "features", "lambda_min", "lambda_max",
                     "noise", "seed"},
              "ridge testbed");
    RidgeHyperTune::Spec s;
    s.train_rows = get_or(spec, "train_rows", s.train_rows);
    s.val_rows = get_or(spec, "val_rows", s.val_rows);
    s.features = get_or(spec, "features", s.features);
    s.lambda_min = get_or(spec, "lambda_min", s.lambda_min);
    s.lambda_max = get_or(spec, "lambda_max", s.lambda_max);
    s.noise = get_or(spec, "noise", s.noise);
    s.seed = get_or<std::uint64_t>(spec, "seed", s.seed);
    return std::make_shared<RidgeHyperTune>(s);
  }
  if (kind == "cauchy") {
    only_keys(spec, {"kind", "inner_spectrum", "dim_x", "coupling_scale", "seed", "region"},
              "cauchy testbed");
    CauchyBilevel::Spec s;
    if (spec.contains("inner_spectrum")) s.inner_spectrum = doubles(spec, "inner_spectrum");
    s.dim_x = get_or(spec, "dim_x", s.dim_x);
    s.coupling_scale = get_or(spec, "coupling_scale", s.coupling_scale);
    s.seed = get_or<std::uint64_t>(spec, "seed", s.seed);
    if (spec.contains("region")) s.region = parse_set(spec.at("region"));
    return std::make_shared<CauchyBilevel>(s);
  }
  throw ConfigError("unknown testbed kind '" + kind + "'");
}

ExperimentConfig parse_config(const json& j) {
  only_keys(j,
            {"testbed", "solver", "class", "N", "feasible_set", "x0", "y0", "noise", "seed",
             "seeds", "cold_start", "exact_paper_schedule", "timing", "schedule", "sweep_N",
             "fit_window", "output_dir"},
            "config");
  ExperimentConfig c;
  c.raw = j;
  if (!j.contains("testbed")) throw ConfigError("config needs a testbed");
  c.testbed = j.at("testbed");
  c.solver = get_or<std::string>(j, "solver", "");
  if (c.solver != "ba" && c.solver != "aba" && c.solver != "bsa") {
    throw ConfigError("solver must be one of ba, aba, bsa");
  }
  c.convexity = convexity_from_string(get_or<std::string>(j, "class", ""));
  c.N = get_or(j, "N", 0);
  if (c.N < 1) throw ConfigError("N must be >= 1");
  if (j.contains("feasible_set")) c.feasible_set = j.at("feasible_set");
  c.x0 = doubles(j, "x0");
  c.y0 = doubles(j, "y0");
  if (j.contains("noise")) {
    const json& n = j.at("noise");
    only_keys(n, {"sigma_x", "sigma_y", "sigma_gy", "sigma_gxy", "sigma_gyy"}, "noise");
    NoiseSpec s;
    s.sigma_x = get_or(n, "sigma_x", 0.0);
    s.sigma_y = get_or(n, "sigma_y", 0.0);
    s.sigma_gy = get_or(n, "sigma_gy", 0.0);
    s.sigma_gxy = get_or(n, "sigma_gxy", 0.0);
    s.sigma_gyy = get_or(n, "sigma_gyy", 0.0);
    s.validate();
    c.noise = s;
  }
  c.seed = get_or<std::uint64_t>(j, "seed", 0);
  if (j.contains("seeds")) {
    const json& s = j.at("seeds");
    if (s.is_number_integer()) {
      const auto count = s.get<long long>();
      if (count < 1) throw ConfigError("seeds count must be >= 1");
      for (long long i = 0; i < count; ++i) c.seeds.push_back(c.seed + static_cast<std::uint64_t>(i));
    } else if (s.is_array()) {
      c.seeds = get_or<std::vector<std::uint64_t>>(j, "seeds", {});
      if (c.seeds.empty()) throw ConfigError("seeds list must be nonempty");
    } else {
      throw ConfigError("seeds must be a count or a list");
    }
  }
  c.cold_start = get_or(j, "cold_start", false);
  c.exact_paper_schedule = get_or(j, "exact_paper_schedule", false);
  c.timing = get_or(j, "timing", false);
  if (j.contains("schedule")) {
    const json& s = j.at("schedule");
    only_keys(s, {"alpha", "inner_steps", "hia_terms"}, "schedule");
    if (s.contains("alpha")) c.alpha = get_or(s, "alpha", 0.0);
    if (s.contains("inner_steps")) c.inner_steps = get_or(s, "inner_steps", 0);
    if (s.contains("hia_terms")) c.hia_terms = get_or(s, "hia_terms", 0);
    if (c.alpha && !(*c.alpha > 0.0)) throw ConfigError("schedule.alpha must be positive");
    if (c.inner_steps && *c.inner_steps < 0) throw ConfigError("schedule.inner_steps must be >= 0");
    if (c.hia_terms && *c.hia_terms < 1) throw ConfigError("schedule.hia_terms must be >= 1");
  }
  c.sweep_N = get_or<std::vector<int>>(j, "sweep_N", {});
  for (int n : c.sweep_N) {
    if (n < 1) throw ConfigError("sweep_N entries must be >= 1");
  }
  if (j.contains("fit_window")) {
    const auto w = doubles(j, "fit_window");
    if (w.size() != 2 || !(w[0] < w[1])) throw ConfigError("fit_window must be [lo, hi] with lo < hi");
    c.fit_window = std::make_pair(w[0], w[1]);
  }
  c.output_dir = get_or<std::string>(j, "output_dir", c.output_dir);

  if (c.solver == "aba" && c.convexity == ConvexityClass::nonconvex) {
    throw ConfigError("aba has no nonconvex preset");
  }
  if (c.solver == "bsa" && !c.noise) throw ConfigError("bsa needs a noise specification");
  if (c.solver != "bsa" && c.noise) throw ConfigError(c.solver + " runs on exact oracles only");
  if (c.solver != "bsa" && c.hia_terms) throw ConfigError("hia_terms applies to bsa only");
  if (c.seeds.size() > 1 && c.solver != "bsa") {
    throw ConfigError("seed ensembles apply to bsa only");
  }
  if (c.seeds.empty()) c.seeds.push_back(c.seed);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return parse_config(j);
}

void override_seed(ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  cfg.raw["seed"] = seed;
  const json& s = cfg.raw.contains("seeds") ? cfg.raw.at("seeds") : json();
  if (s.is_number_integer()) {
    cfg.seeds.clear();
    for (long long i = 0; i < s.get<long long>(); ++i) cfg.seeds.push_back(seed + static_cast<std::uint64_t>(i));
  } else if (!s.is_array()) {
    cfg.seeds = {seed};
  }
}

}  // namespace bilevel::harness
