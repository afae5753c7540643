#include <doctest.h>

#include <cmath>
#include <set>

#include "vmint/parallel.hpp"
#include "vmint/rng.hpp"

using namespace vmint;

TEST_CASE("fnv1a matches published test vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("stream seeds depend on master, key and index") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t m : {1ULL, 2ULL})
    for (const char* key : {"a", "b"})
      for (std::uint64_t i = 0; i < 50; ++i) seen.insert(stream_seed(m, key, i));
  CHECK(seen.size() == 200);
  CHECK(stream_seed(7, "k", 3) == stream_seed(7, "k", 3));
}

TEST_CASE("replicate streams are reproducible") {
  Rng a = replicate_rng(9, "x", 4), b = replicate_rng(9, "x", 4);
  for (int i = 0; i < 100; ++i) CHECK(a() == b());
}

TEST_CASE("uniform, below and exponential have the right moments") {
  Rng rng(123);
  const int n = 200000;
  double su = 0, se = 0;
  std::uint64_t counts[7] = {};
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    su += u;
    se += rng.exponential(2.0);
    ++counts[rng.below(7)];
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(se / n == doctest::Approx(0.5).epsilon(0.01));
  for (auto c : counts) CHECK(std::abs(static_cast<double>(c) - n / 7.0) < 5 * std::sqrt(n / 7.0));
}

TEST_CASE("run_replicates output does not depend on worker count") {
  auto draw = [](std::uint64_t, Rng& rng) { return rng(); };
  const auto one = run_replicates<std::uint64_t>(Streams{5, "w", 1}, 1000, draw);
  const auto four = run_replicates<std::uint64_t>(Streams{5, "w", 4}, 1000, draw);
  CHECK(one == four);
}

TEST_CASE("run_replicates reports the lowest failing replicate") {
  auto fn = [](std::uint64_t i, Rng&) -> int {
    if (i == 300 || i == 700) throw std::runtime_error("boom");
    return 0;
  };
  try {
    run_replicates<int>(Streams{1, "fail", 3}, 1000, fn);
    FAIL("expected ReplicateError");
  } catch (const ReplicateError& e) {
    CHECK(e.index() == 300);
  }
}
