#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "vmint/config.hpp"
#include "vmint/stats.hpp"

namespace vmint {

inline constexpr const char* kVersion = VMINT_VERSION;

/// Knobs shared by every experiment of a run.
struct RunContext {
  std::uint64_t seed = 1;
  unsigned workers = 1;
  std::int64_t hybrid_cap = std::int64_t{1} << 20;
  std::int64_t exact_solve_ceiling = 4000;
  std::int64_t kernel_cutoff_ceiling = 10'000'000;
};
RunContext context_of(const RunConfig& config);

struct ExperimentResult {
  std::string name;
  std::string type;
  std::string kernel;
  std::vector<EstimateReport> rows;
  std::string verdict;  // "pass", "fail" or "inconclusive: censored"
  std::string detail;
  std::uint64_t seed = 0;
  double seconds = 0.0;

  bool passed() const { return verdict == "pass"; }
};

ExperimentResult run_experiment(const ExperimentSpec& spec, const RunContext& context);

struct RunSummary {
  std::vector<ExperimentResult> results;
  std::vector<std::string> files;
  int exit_code = 0;  // 0 all pass, 1 a verdict failed
};

/// Runs every experiment in config order and writes one CSV per experiment
/// plus verdicts.jsonl into the output directory. Nothing is written for an
/// empty experiment list.
RunSummary run_all(const RunConfig& config, std::ostream& log);

/// RFC-4180 table: parameters, estimate columns, then extras. Wall time is
/// deliberately absent so tables are reproducible byte for byte.
void write_csv(const ExperimentResult& result, std::ostream& out);
std::string csv_field(const std::string& field);

/// One JSON object per row: the report, the experiment verdict, and run
/// provenance (version, config hash, timestamp).
void write_jsonl(const ExperimentResult& result, const std::string& config_hash, std::ostream& out);

class PlotKindError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::vector<std::string> plot_kinds();
/// Reshapes JSONL verdict records into a long-format CSV.
void emit_plot_data(std::istream& records, const std::string& kind, std::ostream& out);

}  // namespace vmint
