#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fairaudit/robustness.hpp"

namespace fairaudit {

struct RankedGroup {
  std::string name;
  double mean = 0.0;
  int rank = 1;  // 1 = lowest mean
};

// Classic Scott-Knott clustering of named measurement groups: order by
// mean, recursively take the split with the largest between-group sum
// of squares, keep it when the chi-square approximated likelihood-ratio
// statistic exceeds the alpha critical value. Groups left in one
// cluster share a rank; ranks are contiguous from 1 at the lowest mean.
// Invariant to the order the groups are passed in.
std::vector<RankedGroup> scott_knott(
    const std::vector<std::pair<std::string, std::vector<double>>>& groups, double alpha = 0.05);

struct RunConfig {
  std::string dataset_path;
  std::string schema_path;
  DiscoveryAlg discovery = DiscoveryAlg::Ges;
  PropertySpec prop;
  SearchOptions opts;
  int repeats = 30;
  std::string out_dir;
};

struct RepeatOutcome {
  std::uint64_t seed = 0;
  RobustnessVerdict verdict;
};

struct AuditOutcome {
  int exit_code = 0;  // 0 robust, 2 violation found
  int violations = 0;
  std::string report_path;
  std::string summary_path;
  std::vector<RepeatOutcome> repeats;
};

// Runs the search `repeats` times with seeds derived from the base
// seed, writes report.json, witness CSV/DOT/JSON files and a plain-text
// summary into the output directory, and ranks the two neighbor sides'
// effect distributions with scott_knott. Rerunning with the same
// configuration reproduces the report byte for byte.
AuditOutcome run_audit(const RunConfig& cfg);

// In-memory variant used by run_audit and the tests: the input dataset
// is supplied directly instead of being loaded from cfg.dataset_path.
AuditOutcome run_audit_on(const Dataset& input, const RunConfig& cfg);

}  // namespace fairaudit
