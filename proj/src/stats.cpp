#include "vmint/stats.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include "vmint/rng.hpp"

namespace vmint {

Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  Interval iv{std::max(0.0, center - half), std::min(1.0, center + half)};
  // Rounding can push an endpoint past the point estimate at p = 0 or 1.
  iv.low = std::min(iv.low, p);
  iv.high = std::max(iv.high, p);
  return iv;
}

double mean_of(std::span<const double> values) {
  if (values.empty()) return 0.0;
  long double s = 0;
  for (double v : values) s += v;
  return static_cast<double>(s / static_cast<long double>(values.size()));
}

double median_of(std::vector<double> values) {
  if (values.empty()) return 0.0;
  const std::size_t n = values.size();
  std::sort(values.begin(), values.end());
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

Interval bootstrap_mean_interval(std::span<const double> values, std::uint64_t seed, int resamples,
                                 double level) {
  if (values.empty()) return {0.0, 0.0};
  const double m = mean_of(values);
  if (values.size() == 1) return {m, m};
  Rng rng(splitmix64(seed ^ 0xb007u));
  std::vector<double> means(static_cast<std::size_t>(resamples));
  const auto n = static_cast<std::uint64_t>(values.size());
  for (auto& out : means) {
    long double s = 0;
    for (std::uint64_t i = 0; i < n; ++i) s += values[rng.below(n)];
    out = static_cast<double>(s / static_cast<long double>(n));
  }
  std::sort(means.begin(), means.end());
  const double a = (1.0 - level) / 2.0;
  auto pick = [&](double q) {
    auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(means.size() - 1) + 0.5));
    return means[std::min(idx, means.size() - 1)];
  };
  return {std::min(pick(a), m), std::max(pick(1.0 - a), m)};
}

double EstimateReport::extra(std::string_view name) const {
  for (const auto& [k, v] : extras)
    if (k == name) return v;
  throw std::out_of_range("no extra named " + std::string(name));
}

EstimateReport& EstimateReport::with_param(std::string name, std::string value) {
  params.emplace_back(std::move(name), std::move(value));
  return *this;
}

EstimateReport& EstimateReport::with_param(std::string name, double value) {
  return with_param(std::move(name), format_number(value));
}

EstimateReport& EstimateReport::with_extra(std::string name, double value) {
  extras.emplace_back(std::move(name), value);
  return *this;
}

EstimateReport proportion_report(std::uint64_t successes, std::uint64_t trials, std::uint64_t censored) {
  EstimateReport r;
  r.reps = trials + censored;
  r.censored = censored;
  r.point = trials ? static_cast<double>(successes) / static_cast<double>(trials) : 0.0;
  const Interval iv = wilson_interval(successes, trials);
  r.ci_low = iv.low;
  r.ci_high = iv.high;
  return r;
}

EstimateReport mean_report(std::span<const double> values, std::uint64_t bootstrap_seed, std::uint64_t censored) {
  EstimateReport r;
  r.reps = values.size() + censored;
  r.censored = censored;
  r.point = mean_of(values);
  const Interval iv = bootstrap_mean_interval(values, bootstrap_seed);
  r.ci_low = iv.low;
  r.ci_high = iv.high;
  return r;
}

Interval median_interval(std::vector<double> values, double z) {
  if (values.empty()) return {0.0, 0.0};
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  const double half = z * std::sqrt(n) / 2.0;
  const auto lo = static_cast<std::int64_t>(std::floor(n / 2.0 - half));
  const auto hi = static_cast<std::int64_t>(std::ceil(n / 2.0 + half));
  const auto last = static_cast<std::int64_t>(values.size()) - 1;
  return {values[static_cast<std::size_t>(std::clamp<std::int64_t>(lo - 1, 0, last))],
          values[static_cast<std::size_t>(std::clamp<std::int64_t>(hi - 1, 0, last))]};
}

EstimateReport median_report(std::span<const double> values, std::uint64_t censored) {
  EstimateReport r;
  r.reps = values.size() + censored;
  r.censored = censored;
  r.point = median_of({values.begin(), values.end()});
  const Interval iv = median_interval({values.begin(), values.end()});
  r.ci_low = std::min(iv.low, r.point);
  r.ci_high = std::max(iv.high, r.point);
  return r;
}

bool strictly_below(const EstimateReport& a, const EstimateReport& b) { return a.ci_high < b.ci_low; }
bool not_above(const EstimateReport& a, const EstimateReport& b) { return a.ci_low <= b.ci_high; }
bool intervals_overlap(const EstimateReport& a, const EstimateReport& b) {
  return a.ci_low <= b.ci_high && b.ci_low <= a.ci_high;
}
bool contains(const EstimateReport& r, double value) { return r.ci_low <= value && value <= r.ci_high; }

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, ptr);
}

}  // namespace vmint
