// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails.

#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "bilevel/verify/checks.hpp"

using bilevel::verify::CheckResult;

int main(int argc, char** argv) {
  const std::filesystem::path scratch =
      argc > 1 ? std::filesystem::path(argv[1])
               : std::filesystem::temp_directory_path() / "bilevel_acceptance";

  struct Criterion {
    int id;
    double time_limit;  // seconds, 0 = none
    std::function<CheckResult()> run;
  };
  namespace v = bilevel::verify;
  const std::vector<Criterion> criteria = {
      {1, 5.0, [] { return v::check_hypergradient_fd(100, 1e-6); }},
      {2, 0.0, [] { return v::check_hypergradient_error_bound(1000); }},
      {3, 0.0, [] { return v::check_gd_contraction({1.0, 2.0, 10.0}, 50); }},
      {4, 0.0, [] { return v::check_hia_enumeration({1.5, 2.0, 3.0}, 10); }},
      {5, 0.0, [] { return v::check_ba_strongly_convex(200); }},
      {6, 60.0, [] { return v::check_deterministic_rates(1000); }},
      {7, 300.0, [] { return v::check_bsa_rates(20); }},
      {8, 0.0, [] { return v::check_counters(); }},
      {9, 0.0, [&] { return v::check_determinism(scratch); }},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    CheckResult r = c.run();
    bool pass = r.passed;
    std::string detail = r.detail;
    if (c.time_limit > 0.0 && r.seconds >= c.time_limit) {
      pass = false;
      detail += " [runtime over " + std::to_string(static_cast<int>(c.time_limit)) + " s]";
    }
    std::printf("%s  criterion %d  %-38s %7.2fs  %s\n", pass ? "PASS" : "FAIL", c.id,
                r.name.c_str(), r.seconds, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failed;
  }
  std::printf("%zu criteria, %d failed\n", criteria.size(), failed);
  return failed == 0 ? 0 : 1;
}
