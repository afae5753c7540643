#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "vmint/kernel.hpp"

using namespace vmint;

TEST_CASE("spec parsing round-trips") {
  CHECK(parse_kernel_spec("nearest_neighbor").family == KernelFamily::nearest_neighbor);
  const auto u = parse_kernel_spec("uniform_range(3)");
  CHECK(u.family == KernelFamily::uniform_range);
  CHECK(u.range == 3);
  const auto p = parse_kernel_spec(" power_law( 1.5 , 1000 ) ");
  CHECK(p.alpha == 1.5);
  CHECK(p.cutoff == 1000);
  CHECK_THROWS_AS(parse_kernel_spec("levy(2)"), KernelError);
  CHECK_THROWS_AS(build_kernel(parse_kernel_spec("power_law(1.5, 0)")), KernelError);
  CHECK_THROWS_AS(build_kernel(parse_kernel_spec("uniform_range(0)")), KernelError);
}

TEST_CASE("nearest neighbor and uniform range masses") {
  const Kernel nn = build_kernel(parse_kernel_spec("nearest_neighbor"));
  CHECK(nn.mass(1) == 0.5);
  CHECK(nn.mass(-1) == 0.5);
  CHECK(nn.mass(0) == 0.0);
  CHECK(nn.moment(2.0) == doctest::Approx(1.0));
  const Kernel u = build_kernel(parse_kernel_spec("uniform_range(2)"));
  for (int x : {-2, -1, 1, 2}) CHECK(u.mass(x) == doctest::Approx(0.25));
  CHECK(u.moment(2.0) == doctest::Approx(2.5));
  CHECK(u.is_symmetric());
  CHECK(u.mean() == doctest::Approx(0.0));
}

TEST_CASE("power law normalizer and tails against direct sums") {
  const double alpha = 1.2;
  const std::int64_t cutoff = 500;
  const Kernel k = build_kernel(parse_kernel_spec("power_law(1.2, 500)"));
  double z = 0.0;
  for (std::int64_t x = 1; x <= cutoff; ++x) z += 2.0 * std::pow(double(x), -1.0 - alpha);
  CHECK(k.mass(1) == doctest::Approx(1.0 / z).epsilon(1e-12));
  CHECK(k.mass(-37) == doctest::Approx(std::pow(37.0, -2.2) / z).epsilon(1e-12));
  CHECK(k.total_mass() == doctest::Approx(1.0));
  for (std::int64_t m : {1, 7, 64, 500, 501}) {
    double pos = 0.0;
    for (std::int64_t x = m; x <= cutoff; ++x) pos += std::pow(double(x), -1.0 - alpha) / z;
    CHECK(k.tail_mass(m, TailSide::positive) == doctest::Approx(pos).epsilon(1e-10));
    CHECK(k.tail_mass(m) == doctest::Approx(2 * pos).epsilon(1e-10));
  }
  double dbl = 0.0;
  for (std::int64_t j = 5; j <= cutoff; ++j) dbl += k.tail_mass(j, TailSide::positive);
  CHECK(k.double_tail(5, TailSide::positive) == doctest::Approx(dbl).epsilon(1e-10));
}

TEST_CASE("symmetrize and split") {
  const Kernel skew = Kernel::from_masses({{1, 0.7}, {-2, 0.3}}, "skew");
  const Kernel s = symmetrize(skew);
  CHECK(s.mass(1) == doctest::Approx(0.35));
  CHECK(s.mass(-1) == doctest::Approx(0.35));
  CHECK(s.mass(2) == doctest::Approx(0.15));
  CHECK(s.is_symmetric());
  const Kernel u = build_kernel(parse_kernel_spec("uniform_range(3)"));
  const auto parts = split_at(u, 2);
  CHECK(parts.near.total_mass() == doctest::Approx(4.0 / 6.0));
  CHECK(parts.far.total_mass() == doctest::Approx(2.0 / 6.0));
  CHECK(parts.far.mass(3) == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("irreducibility") {
  CHECK(is_irreducible(Kernel::from_masses({{2, 0.5}, {-2, 0.5}}, "even")) == false);
  CHECK(is_irreducible(Kernel::from_masses({{2, 0.5}, {-3, 0.5}}, "coprime")));
}

TEST_CASE("sampling frequencies match masses") {
  const Kernel k = build_kernel(parse_kernel_spec("power_law(1.5, 40)"));
  Rng rng(77);
  const int n = 400000;
  std::map<std::int64_t, int> counts;
  for (int i = 0; i < n; ++i) ++counts[k.sample(rng)];
  for (std::int64_t x : {-40, -3, -1, 1, 2, 10, 40}) {
    const double p = k.mass(x);
    CHECK(std::abs(counts[x] - n * p) < 5 * std::sqrt(n * p * (1 - p)) + 1);
  }
  double biased = 0.0, expect = 0.0;
  for (int i = 0; i < n; ++i) biased += double(k.sample_size_biased(TailSide::positive, rng));
  double num = 0.0;
  for (std::int64_t d = 1; d <= 40; ++d) {
    num += double(d) * double(d) * k.mass(d);
    expect += double(d) * k.mass(d);
  }
  CHECK(biased / n == doctest::Approx(num / expect).epsilon(0.02));
}

TEST_CASE("kernel table text format") {
  std::istringstream in("# site mass\n-1 0.25\n1 0.5\n3 0.25\n");
  const auto entries = read_kernel_table(in);
  REQUIRE(entries.size() == 3);
  CHECK(entries[2].first == 3);
  const Kernel k = Kernel::from_masses(entries, "t");
  std::ostringstream out;
  write_kernel_table(k, out);
  std::istringstream back(out.str());
  CHECK(read_kernel_table(back) == entries);
}
