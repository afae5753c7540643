#include <doctest.h>

#include <cmath>
#include <vector>

#include "vmint/stats.hpp"

using namespace vmint;

namespace {
// Wilson score interval written out from its closed form.
std::pair<double, double> wilson(double s, double n, double z) {
  const double p = s / n, z2 = z * z;
  const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
  const double half = z / (1 + z2 / n) * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n));
  return {centre - half, centre + half};
}
}  // namespace

TEST_CASE("wilson interval matches closed form") {
  for (auto [s, n] : {std::pair{0, 10}, {3, 10}, {10, 10}, {4, 1000}, {500, 1000}}) {
    const auto got = wilson_interval(s, n);
    const auto want = wilson(s, n, 1.959963984540054);
    CHECK(got.low == doctest::Approx(want.first).epsilon(1e-9));
    CHECK(got.high == doctest::Approx(want.second).epsilon(1e-9));
  }
  CHECK(wilson_interval(0, 10).low == doctest::Approx(0.0));
}

TEST_CASE("proportion report counts censored replicates") {
  const auto r = proportion_report(30, 90, 10);
  CHECK(r.point == doctest::Approx(1.0 / 3.0));
  CHECK(r.reps == 100);
  CHECK(r.censored == 10);
  CHECK(r.completed() == 90);
}

TEST_CASE("mean report bootstrap interval brackets the mean") {
  std::vector<double> v;
  for (int i = 0; i < 1000; ++i) v.push_back(i % 10);
  const auto r = mean_report(v, 42);
  CHECK(r.point == doctest::Approx(4.5));
  CHECK(r.ci_low < 4.5);
  CHECK(r.ci_high > 4.5);
  CHECK(r.ci_high - r.ci_low < 0.5);
  const auto again = mean_report(v, 42);
  CHECK(again.ci_low == r.ci_low);
}

TEST_CASE("median and its order-statistic interval") {
  std::vector<double> v;
  for (int i = 1; i <= 101; ++i) v.push_back(i);
  CHECK(median_of(v) == 51);
  const auto iv = median_interval(v);
  CHECK(iv.low < 51);
  CHECK(iv.high > 51);
  CHECK(iv.low >= 40);
  CHECK(iv.high <= 62);
  CHECK(median_of({1, 2, 3, 4}) == doctest::Approx(2.5));
}

TEST_CASE("interval comparisons") {
  EstimateReport a, b;
  a.point = 0.1, a.ci_low = 0.05, a.ci_high = 0.15;
  b.point = 0.3, b.ci_low = 0.2, b.ci_high = 0.4;
  CHECK(strictly_below(a, b));
  CHECK_FALSE(strictly_below(b, a));
  CHECK(not_above(a, b));
  CHECK_FALSE(intervals_overlap(a, b));
  CHECK(contains(a, 0.12));
  CHECK_FALSE(contains(a, 0.2));
}

TEST_CASE("format_number is shortest round-trip") {
  CHECK(format_number(0.3) == "0.3");
  CHECK(format_number(250) == "250");
  CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
}
