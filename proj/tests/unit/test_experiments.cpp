#include <doctest.h>

#include <cmath>

#include "vmint/experiments.hpp"

using namespace vmint;

namespace {
const Kernel& nn() {
  static const Kernel k = build_kernel(parse_kernel_spec("nearest_neighbor"));
  return k;
}
}  // namespace

TEST_CASE("A(k,r) for simple random walk is 2^-(r+1)") {
  for (int r : {1, 2, 3}) CHECK(exact_Akr(nn(), 4, r) == doctest::Approx(std::ldexp(1.0, -(r + 1))).epsilon(1e-10));
  const auto mc = exp_Akr(nn(), 4, 2, 20000, Streams{1, "akr", 1});
  CHECK(contains(mc, 0.125));
  CHECK(mc.extra("scaled") == doctest::Approx(4 * mc.point));
}

TEST_CASE("A(k,r) exact and monte carlo agree for a jumping kernel") {
  const Kernel u = build_kernel(parse_kernel_spec("uniform_range(2)"));
  const double exact = exact_Akr(u, 4, 1);
  const auto mc = exp_Akr(u, 4, 1, 20000, Streams{1, "akr-u", 1});
  CHECK(contains(mc, exact));
}

TEST_CASE("nearest-neighbor difference walk cannot jump over 0") {
  for (double t : {1.0, 50.0}) CHECK(exp_Vk(nn(), 2, t, 2000, Streams{1, "vk", 1}).point == 0.0);
  const auto o = exp_overshoot(nn(), 3, 1, 2000, Streams{1, "os", 1});
  CHECK(o.mean_overshoot.point == 0.0);
}

TEST_CASE("green function report on the difference walk") {
  // Difference walk of nearest-neighbor p is simple random walk; on (0, 8)
  // the killed green function is 2 min(x,l) (8 - max(x,l)) / 8.
  const auto g = exp_greenfn(nn(), 4, 1, 2, 2, 20000, Streams{1, "g", 1});
  REQUIRE(g.exact.has_value());
  CHECK(*g.exact == doctest::Approx(3.0));
  CHECK(contains(g.occupation, 3.0));
  CHECK(g.agree);
  CHECK_THROWS_AS(exp_greenfn(nn(), 4, 1, 9, 2, 100, Streams{1, "g", 1}), PreconditionError);
}

TEST_CASE("schedule point uses the one-sided tail beyond 2^(k+2)") {
  const Kernel k = build_kernel(parse_kernel_spec("power_law(1.2, 100000)"));
  for (int kk : {3, 4}) {
    const auto p = schedule_point(k, 0.25, kk);
    double tail = 0.0;
    for (std::int64_t x = std::int64_t{4} << kk; x <= 100000; ++x) tail += k.mass(x);
    CHECK(p.M == (std::int64_t{1} << kk));
    CHECK(p.t == doctest::Approx(0.25 / tail).epsilon(1e-9));
  }
}

TEST_CASE("schedule walk estimates") {
  const Kernel k = build_kernel(parse_kernel_spec("power_law(1.2, 100000)"));
  const std::vector<int> ks = {3};
  const auto rows = exp_theorem2_schedule(k, 0.25, ks, 4000, 0, Streams{1, "sched", 1});
  REQUIRE(rows.size() == 1);
  CHECK(contains(rows[0].big_jump, 0.25 * std::exp(-0.5)));
  CHECK(rows[0].interface.reps == 0);
  CHECK_THROWS_AS(exp_theorem2_schedule(build_kernel(parse_kernel_spec("uniform_range(3)")), 0.25, ks, 100, 0,
                                        Streams{1, "s", 1}),
                  PreconditionError);
}

TEST_CASE("tightness sweep for nearest neighbor is identically zero") {
  const std::vector<double> times = {10.0, 100.0};
  const std::vector<std::int64_t> levels = {1, 3};
  const auto table = exp_tightness_sweep(nn(), times, levels, 100, Streams{1, "tight", 1});
  for (const auto& s : table.survival) CHECK(s.point == 0.0);
  for (const auto& m : table.median_size) CHECK(m.point == 0.0);
  CHECK(table.at(1, 1).reps == 100);
}

TEST_CASE("excursion needs t > 2k^2") {
  CHECK_THROWS_AS(exp_excursion(nn(), 5, 40.0, 100, Streams{1, "e", 1}), PreconditionError);
}
