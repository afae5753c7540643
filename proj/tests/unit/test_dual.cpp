#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "vmint/dual.hpp"
#include "vmint/experiments.hpp"

using namespace vmint;

namespace {
const Kernel& nn() {
  static const Kernel k = build_kernel(parse_kernel_spec("nearest_neighbor"));
  return k;
}

// P(x + N1 - N2 <= 0) with N1, N2 independent Poisson(t/2): the rate-1
// nearest-neighbor walk started at x.
double skellam_cdf_below(std::int64_t x, double t) {
  const int cap = 200;
  std::vector<double> pois(cap);
  pois[0] = std::exp(-t / 2);
  for (int n = 1; n < cap; ++n) pois[n] = pois[n - 1] * (t / 2) / n;
  double p = 0.0;
  for (int a = 0; a < cap; ++a)
    for (int b = 0; b < cap; ++b)
      if (x + a - b <= 0) p += pois[a] * pois[b];
  return p;
}
}  // namespace

TEST_CASE("walker set coalesces consistently") {
  std::vector<std::int64_t> sites(30);
  std::iota(sites.begin(), sites.end(), 0);
  auto walkers = init_walkers(sites);
  Rng rng(17);
  std::size_t last = walkers.live_count();
  CHECK(last == 30);
  for (int step = 0; step < 20; ++step) {
    walkers.evolve(nn(), 1.0, rng);
    CHECK(walkers.live_count() <= last);
    last = walkers.live_count();
    std::set<std::int64_t> occupied;
    for (const auto& [site, id] : walkers.live_sorted()) CHECK(occupied.insert(site).second);
    CHECK(walkers.merges().size() == 30 - walkers.live_count());
    CHECK(walkers.root_count() == walkers.live_count());
    for (std::int64_t a = 0; a < 30; ++a)
      for (std::int64_t b = 0; b < 30; ++b)
        CHECK(walkers.coalesced(a, b) == (walkers.position(a) == walkers.position(b)));
  }
  CHECK(walkers.clock() == doctest::Approx(20.0));
}

TEST_CASE("dual marginal against the Skellam law") {
  for (std::int64_t x : {-2, 0, 1, 3}) {
    const auto r = dual_marginal(nn(), x, 4.0, 20000, Streams{1, "dual/" + std::to_string(x), 1});
    CHECK(contains(r, skellam_cdf_below(x, 4.0)));
  }
}

TEST_CASE("forward voter marginals against the Skellam law") {
  const std::vector<std::int64_t> sites = {-1, 0, 1, 2};
  const auto fwd = forward_marginals(nn(), 4.0, sites, 20000, Streams{2, "fwd", 1});
  for (std::size_t i = 0; i < sites.size(); ++i) CHECK(contains(fwd[i], skellam_cdf_below(sites[i], 4.0)));
}

TEST_CASE("density starts at one and decays") {
  const auto d0 = density(nn(), 0.0, 200, 100, Streams{1, "d0", 1});
  CHECK(d0.point == 1.0);
  const auto d4 = density(nn(), 4.0, 400, 100, Streams{1, "d4", 1});
  CHECK(d4.point < 1.0);
  CHECK(density_margin(nn(), 4.0) == 20);
}

TEST_CASE("crossing pairs need t >= K") {
  Rng rng(1);
  CHECK_THROWS(crossing_pairs(nn(), 1.0, 2.0, 100, rng));
  CHECK(crossing_pairs(nn(), 2.0, 2.0, 100, rng).empty());
  // Nearest-neighbor walkers cannot pass each other without meeting.
  const auto census = crossing_census(nn(), 20.0, 2.0, 200, 100, Streams{1, "cross", 1});
  CHECK(census.probability.point == 0.0);
  CHECK(census.pairs_examined > 0);
}
