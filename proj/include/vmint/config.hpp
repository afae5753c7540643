#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vmint/kernel.hpp"

namespace vmint {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One [experiment NAME] section. Values are validated against the schema of
/// the section's type while parsing; the getters only convert.
struct ExperimentSpec {
  std::string name;
  std::string type;
  int line = 0;
  std::vector<std::pair<std::string, std::string>> entries;

  bool has(std::string_view key) const;
  const std::string& text(std::string_view key) const;
  double number(std::string_view key) const;
  double number_or(std::string_view key, double fallback) const;
  std::int64_t integer(std::string_view key) const;
  std::int64_t integer_or(std::string_view key, std::int64_t fallback) const;
  std::vector<double> numbers(std::string_view key) const;
  std::vector<std::int64_t> integers(std::string_view key) const;
  KernelSpec kernel() const;
};

struct RunConfig {
  std::uint64_t master_seed = 1;
  unsigned workers = 1;
  std::string output_dir = "results";
  std::int64_t hybrid_cap = std::int64_t{1} << 20;
  std::int64_t exact_solve_ceiling = 4000;
  std::int64_t kernel_cutoff_ceiling = 10'000'000;
  std::vector<ExperimentSpec> experiments;
  /// Raw [run] entries as written, for the canonical form.
  std::vector<std::pair<std::string, std::string>> run_entries;

  /// Sections and keys sorted, whitespace removed from values.
  std::string canonical() const;
  /// FNV-1a of the canonical form, as 16 hex digits.
  std::string hash() const;
};

RunConfig parse_config_text(std::string_view text, std::string_view origin = "<config>");
RunConfig parse_config(const std::string& path);

/// Experiment types understood by the harness.
std::vector<std::string> experiment_types();

}  // namespace vmint
