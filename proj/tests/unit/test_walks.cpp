#include <doctest.h>

#include <cmath>

#include "vmint/walks.hpp"

using namespace vmint;

namespace {
const Kernel& nn() {
  static const Kernel k = build_kernel(parse_kernel_spec("nearest_neighbor"));
  return k;
}

// Killed green function of simple random walk on (0, n): expected visits to l from x.
double srw_green(std::int64_t x, std::int64_t l, std::int64_t n) {
  return 2.0 * double(std::min(x, l)) * double(n - std::max(x, l)) / double(n);
}

// Paths of 2m +-1 steps that avoid 0 after time 0, by enumeration.
double enumerated_no_return(int steps) {
  int good = 0;
  for (int mask = 0; mask < (1 << steps); ++mask) {
    int pos = 0;
    bool ok = true;
    for (int i = 0; i < steps; ++i) {
      pos += (mask >> i & 1) ? 1 : -1;
      ok = ok && pos != 0;
    }
    good += ok;
  }
  return double(good) / double(1 << steps);
}
}  // namespace

TEST_CASE("gambler's ruin by exact solve") {
  for (std::int64_t x = 1; x < 10; ++x) {
    const auto solve = exact_solve(nn(), 0, 10, two_sided_partition(0, 10), 2);
    CHECK(solve.absorption(x, 1) == doctest::Approx(double(x) / 10.0).epsilon(1e-12));
    CHECK(solve.absorption(x, 0) + solve.absorption(x, 1) == doctest::Approx(1.0));
  }
}

TEST_CASE("exact green function of simple random walk") {
  const auto solve = exact_solve(nn(), 0, 4, two_sided_partition(0, 4), 2);
  CHECK(solve.green(1, 1) == doctest::Approx(1.5));
  for (std::int64_t x = 1; x < 4; ++x)
    for (std::int64_t l = 1; l < 4; ++l) CHECK(solve.green(x, l) == doctest::Approx(srw_green(x, l, 4)));
  CHECK(solve.occupation(1, 1, 2.0) == doctest::Approx(0.75));
  // Escape from l before returning is 1 / G(l, l).
  CHECK(solve.escape_before_return(2) == doctest::Approx(1.0 / srw_green(2, 2, 4)));
  CHECK(solve.hit_before_exit(1, 3) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("exact solve rejects oversized intervals") {
  ExactSolveOptions options;
  options.max_unknowns = 10;
  CHECK_THROWS_AS(exact_solve(nn(), 0, 100, two_sided_partition(0, 100), 2, options), ExactSolveError);
  CHECK_THROWS_AS(exact_solve(nn(), 0, 1, two_sided_partition(0, 1), 2), ExactSolveError);
}

TEST_CASE("monte carlo gambler's ruin contains the exact value") {
  const auto r = hit_before(nn(), 3, Target::point(10), Target::point(0), 20000, Streams{11, "gr", 1});
  CHECK(contains(r, 0.3));
  CHECK(r.reps == 20000);
}

TEST_CASE("hit_before with jumping kernel agrees with exact absorption") {
  const Kernel u = build_kernel(parse_kernel_spec("uniform_range(3)"));
  const auto solve = exact_solve(u, 0, 12, two_sided_partition(0, 12), 2);
  const auto r = hit_before(u, 4, Target::at_least(12), Target::at_most(0), 20000, Streams{3, "u3", 1});
  CHECK(contains(r, solve.absorption(4, 1)));
}

TEST_CASE("return tail against path enumeration") {
  CHECK(enumerated_no_return(4) == doctest::Approx(6.0 / 16.0));
  const auto rt = return_tail(nn(), 2, 40000, Streams{2, "rt", 1});
  CHECK(contains(rt.embedded, enumerated_no_return(4)));
}

TEST_CASE("stopping horizons") {
  Rng rng(5);
  StoppingSpec spec;
  spec.targets = {Target::point(1000)};
  spec.horizon = 25.0;
  const auto out = run_chain(nn(), 0, spec, rng);
  CHECK(out.expired());
  CHECK(std::abs(out.final_position) <= 25);
  StoppingSpec none;
  CHECK_THROWS(none.validate());
}

TEST_CASE("occupation is tracked until the stop") {
  Rng rng(8);
  StoppingSpec spec;
  spec.targets = {Target::outside(0, 6)};
  const auto out = run_walk(nn(), 3, spec, rng, true);
  double total = 0.0;
  for (const auto& [site, time] : out.occupation) {
    CHECK(site > 0);
    CHECK(site < 6);
    total += time;
  }
  CHECK(total == doctest::Approx(out.hit_time));
}

TEST_CASE("difference walk uses the symmetrized law at rate 2") {
  const Kernel skew = Kernel::from_masses({{1, 1.0}}, "right");
  DifferenceWalk z(skew);
  CHECK(z.step_kernel().mass(1) == doctest::Approx(0.5));
  CHECK(z.step_kernel().mass(-1) == doctest::Approx(0.5));
  CHECK(DifferenceWalk::rate() == 2.0);
}

TEST_CASE("potential kernel of simple random walk is |x|") {
  for (std::int64_t x : {1, 2, 3}) {
    const auto a = potential_kernel(nn(), x, 40000);
    CHECK(a.value == doctest::Approx(double(x)).epsilon(0.03));
  }
  CHECK(potential_kernel(nn(), 0, 100).value == 0.0);
}
