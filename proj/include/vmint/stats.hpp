#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vmint {

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

inline constexpr double kZ95 = 1.959963984540054;

/// Wilson score interval for a binomial proportion.
Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z = kZ95);

/// Percentile bootstrap interval for the mean. Deterministic in `seed`.
Interval bootstrap_mean_interval(std::span<const double> values, std::uint64_t seed,
                                 int resamples = 1000, double level = 0.95);

double mean_of(std::span<const double> values);
double median_of(std::vector<double> values);
/// Distribution-free interval for the median from binomial order statistics.
Interval median_interval(std::vector<double> values, double z = kZ95);

/// A Monte Carlo estimate with its interval and provenance.
struct EstimateReport {
  double point = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::uint64_t reps = 0;
  std::uint64_t censored = 0;
  std::string experiment;
  std::vector<std::pair<std::string, std::string>> params;
  std::vector<std::pair<std::string, double>> extras;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;

  std::uint64_t completed() const { return reps - censored; }
  double extra(std::string_view name) const;
  EstimateReport& with_param(std::string name, std::string value);
  EstimateReport& with_param(std::string name, double value);
  EstimateReport& with_extra(std::string name, double value);
};

EstimateReport proportion_report(std::uint64_t successes, std::uint64_t trials,
                                 std::uint64_t censored = 0);
EstimateReport mean_report(std::span<const double> values, std::uint64_t bootstrap_seed,
                           std::uint64_t censored = 0);
EstimateReport median_report(std::span<const double> values, std::uint64_t censored = 0);

/// a is significantly below b: the intervals do not overlap.
bool strictly_below(const EstimateReport& a, const EstimateReport& b);
/// a is not significantly above b.
bool not_above(const EstimateReport& a, const EstimateReport& b);
bool intervals_overlap(const EstimateReport& a, const EstimateReport& b);
bool contains(const EstimateReport& r, double value);

/// Shortest round-trip decimal text for a double; used in every output file.
std::string format_number(double v);

}  // namespace vmint
