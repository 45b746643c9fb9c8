#pragma once

#include <string>
#include <vector>

#include "wd/symbolic.hpp"

namespace wd::verify {

struct Options {
  long long strata_max_n = 8;
  long long bruhat_max_n = 4;
  long long matrix_max_dim = 6;
  long long telescope_bound = 12;
  long long reconstruct_max_n = 12;
  int random_instances = 200;
  unsigned long long seed = 0x5d1e9ULL;
  bool inject_fault = false;   // harness self-test: force one failure
  std::string cli_path;        // for the golden-file criterion
  std::string golden_dir;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  double seconds = 0.0;
  double limit_seconds = 0.0;
  std::string detail;
};

std::vector<CriterionResult> run_all(const Options& opts);
bool all_pass(const std::vector<CriterionResult>& results);
json report_json(const std::vector<CriterionResult>& results, const Options& opts);
std::string report_text(const std::vector<CriterionResult>& results);

// Brute-force oracle used by the uniqueness criterion: enumerates every
// string-family monodromy compatible with a standard-model semisimple phi
// and returns the canonical forms of those that come out pure.
std::vector<std::string> pure_orbit_forms(const SymbolicWD& lines, const Int& p0);

}  // namespace wd::verify
