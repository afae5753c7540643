#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "vmint/harness.hpp"

namespace vmint {

struct CriterionOutcome {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
  double limit_seconds = 0.0;  // 0 means no limit
  std::vector<ExperimentResult> tables;
};

struct SuiteOptions {
  std::uint64_t seed = 20240601;
  unsigned workers = 1;
  /// Worker count for the determinism re-run.
  unsigned alternate_workers = 3;
  /// Tables are written under this directory when nonempty.
  std::string output_dir;
};

class UnknownSuiteError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// "acceptance" runs every criterion; "smoke" the ones that finish in seconds.
std::vector<std::string> suite_names();

/// Runs a suite, printing one line per criterion to `out` as it completes.
std::vector<CriterionOutcome> run_suite(const std::string& suite, const SuiteOptions& options, std::ostream& out);

std::string format_outcome(const CriterionOutcome& outcome);

}  // namespace vmint
