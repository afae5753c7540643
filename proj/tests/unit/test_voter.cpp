#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "vmint/voter.hpp"

using namespace vmint;

namespace {

std::vector<std::uint8_t> bits(const char* s) {
  std::vector<std::uint8_t> out;
  for (; *s; ++s) out.push_back(*s == '1');
  return out;
}

InterfaceState make_state(std::int64_t l, const char* hybrid) {
  InterfaceState s;
  s.left_zero = l;
  s.hybrid = bits(hybrid);
  s.right_one = l + static_cast<std::int64_t>(s.hybrid.size()) - 1;
  s.inversions = count_inversions(s.hybrid);
  return s;
}

// Plain configuration: ones below `lo`, zeros from `lo + size` on, explicit in between.
struct Naive {
  std::map<std::int64_t, int> sites;
  std::int64_t lo = 0, hi = 0;  // explicit range [lo, hi)

  explicit Naive(const InterfaceState& s) : lo(s.left_zero - 1), hi(s.right_one + 2) {
    for (std::int64_t x = lo; x < hi; ++x) sites[x] = s.value(x);
  }
  int get(std::int64_t x) const {
    if (x < lo) return 1;
    if (x >= hi) return 0;
    return sites.at(x);
  }
  void set(std::int64_t x, int v) {
    while (x < lo) sites[--lo] = 1;
    while (x >= hi) sites[hi++] = 0;
    sites[x] = v;
  }
  std::int64_t l() const {
    for (std::int64_t x = lo; x < hi; ++x)
      if (get(x) == 0) return x;
    return hi;
  }
  std::int64_t r() const {
    for (std::int64_t x = hi - 1; x >= lo; --x)
      if (get(x) == 1) return x;
    return lo - 1;
  }
};

// Gillespie simulation straight from the Harris description: every site
// within the kernel radius of [l, r] rings at rate 1 and copies from x + Y.
// Sites further out see only their own value, so omitting them is exact.
InterfaceStats naive_run(const Kernel& kernel, double horizon, Rng& rng) {
  Naive cfg(init_heavyside());
  const std::int64_t R = kernel.radius();
  double t = 0.0;
  for (;;) {
    const std::int64_t l = cfg.l(), r = cfg.r();
    const std::int64_t first = std::min(l, r + 1) - R, last = std::max(r, l - 1) + R;
    const auto count = static_cast<std::uint64_t>(last - first + 1);
    t += rng.exponential(static_cast<double>(count));
    if (t > horizon) break;
    const std::int64_t x = first + static_cast<std::int64_t>(rng.below(count));
    cfg.set(x, cfg.get(x + kernel.sample(rng)));
  }
  InterfaceStats s;
  s.l = cfg.l();
  s.r = cfg.r();
  s.size = s.r - s.l + 1;
  std::vector<std::uint8_t> h;
  for (std::int64_t x = s.l; x <= s.r; ++x) h.push_back(static_cast<std::uint8_t>(cfg.get(x)));
  s.inversions = count_inversions(h);
  return s;
}

struct Moments {
  double mean = 0, var = 0;
};
template <class Fn>
Moments sample(int n, Fn fn) {
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double v = fn(i);
    s += v;
    s2 += v * v;
  }
  Moments m;
  m.mean = s / n;
  m.var = s2 / n - m.mean * m.mean;
  return m;
}

void compare_with_naive(const char* spec, double horizon, int reps) {
  const Kernel k = build_kernel(parse_kernel_spec(spec));
  const VoterDynamics dyn(k);
  std::vector<InterfaceState> fast;
  std::vector<InterfaceStats> slow;
  for (int i = 0; i < reps; ++i) {
    Rng a = replicate_rng(1, std::string("fast/") + spec, i);
    Rng b = replicate_rng(1, std::string("slow/") + spec, i);
    fast.push_back(run_voter(dyn, init_heavyside(), horizon, a));
    slow.push_back(naive_run(k, horizon, b));
  }
  auto check = [&](const char* what, auto f_fast, auto f_slow) {
    const auto a = sample(reps, [&](int i) { return f_fast(fast[i]); });
    const auto b = sample(reps, [&](int i) { return f_slow(slow[i]); });
    const double se = std::sqrt((a.var + b.var) / reps);
    INFO(spec << " " << what << ": engine " << a.mean << ", naive " << b.mean << ", se " << se);
    CHECK(std::abs(a.mean - b.mean) < 4.5 * se + 1e-12);
  };
  check("size", [](const InterfaceState& s) { return double(s.size()); }, [](const InterfaceStats& s) { return double(s.size); });
  check("B", [](const InterfaceState& s) { return double(s.inversions); },
        [](const InterfaceStats& s) { return double(s.inversions); });
  check("l", [](const InterfaceState& s) { return double(s.left_zero); }, [](const InterfaceStats& s) { return double(s.l); });
  check("size>2", [](const InterfaceState& s) { return double(s.size() > 2); },
        [](const InterfaceStats& s) { return double(s.size > 2); });
}

}  // namespace

TEST_CASE("inversion count") {
  CHECK(count_inversions(bits("0101")) == 3);
  CHECK(count_inversions(bits("")) == 0);
  CHECK(count_inversions(bits("1100")) == 0);
  CHECK(count_inversions(bits("0011")) == 4);
}

TEST_CASE("heavyside start") {
  const auto s = init_heavyside();
  CHECK(s.left_zero == 1);
  CHECK(s.right_one == 0);
  CHECK(s.size() == 0);
  CHECK(s.value(0) == 1);
  CHECK(s.value(1) == 0);
  CHECK_NOTHROW(s.validate());
  auto bad = make_state(3, "101");
  CHECK_THROWS(bad.validate());
  const auto st = interface_stats(make_state(-2, "0101"));
  CHECK(st.size == 4);
  CHECK(st.inversions == 3);
}

TEST_CASE("lattice keeps l, r and B under arbitrary flips") {
  VoterLattice lat(init_heavyside());
  Naive ref(init_heavyside());
  Rng rng(99);
  for (int i = 0; i < 3000; ++i) {
    const std::int64_t x = static_cast<std::int64_t>(rng.below(41)) - 20;
    const int v = static_cast<int>(rng.below(2));
    lat.set(x, v);
    ref.set(x, v);
    REQUIRE(lat.left_zero() == ref.l());
    REQUIRE(lat.right_one() == ref.r());
    std::vector<std::uint8_t> h;
    for (std::int64_t y = ref.l(); y <= ref.r(); ++y) h.push_back(static_cast<std::uint8_t>(ref.get(y)));
    REQUIRE(lat.inversions() == count_inversions(h));
  }
  const auto snap = lat.snapshot(1.0);
  CHECK_NOTHROW(snap.validate());
  for (std::int64_t x = -30; x <= 30; ++x) CHECK(snap.value(x) == ref.get(x));
}

TEST_CASE("lattice order statistics and best split") {
  const auto s = make_state(0, "0110100");
  VoterLattice lat(s, 2);
  const std::int64_t base = lat.base();
  std::int64_t ones = 0;
  for (std::int64_t x = base; x < base + static_cast<std::int64_t>(lat.window()); ++x) {
    ones += lat.value(x);
    CHECK(lat.ones_through(x) == ones);
    if (lat.value(x) == 1) CHECK(lat.kth_one(ones) == x);
  }
  CHECK(lat.ones_between(0, 6) == 3);
  std::int64_t best = 0, cost = 1 << 30;
  for (std::int64_t split = s.left_zero; split <= s.right_one + 1; ++split) {
    std::int64_t c = 0;
    for (std::int64_t x = s.left_zero; x <= s.right_one; ++x) c += x < split ? lat.value(x) == 0 : lat.value(x) == 1;
    if (c < cost) cost = c, best = split;
  }
  const std::int64_t got = lat.best_split();
  std::int64_t got_cost = 0;
  for (std::int64_t x = s.left_zero; x <= s.right_one; ++x) got_cost += x < got ? lat.value(x) == 0 : lat.value(x) == 1;
  CHECK(got_cost == cost);
  (void)best;
}

TEST_CASE("exterior flip rates against the direct double sum") {
  const Kernel k = build_kernel(parse_kernel_spec("power_law(1.3, 30)"));
  for (const char* h : {"", "0", "01", "0110", "1001101"}) {
    const auto s = *h ? make_state(-3, h) : init_heavyside();
    double left = 0.0, right = 0.0;
    for (std::int64_t x = s.left_zero - 40; x < s.left_zero; ++x)
      for (std::int64_t y : k.sites()) left += k.mass(y) * (s.value(x + y) == 0);
    for (std::int64_t x = s.right_one + 1; x <= s.right_one + 40; ++x)
      for (std::int64_t y : k.sites()) right += k.mass(y) * (s.value(x + y) == 1);
    const auto rates = exterior_flip_rates(s, k);
    CHECK(rates.left == doctest::Approx(left).epsilon(1e-10));
    CHECK(rates.right == doctest::Approx(right).epsilon(1e-10));
  }
}

TEST_CASE("event log replays to the returned state") {
  for (const char* spec : {"uniform_range(3)", "power_law(1.1, 200)"}) {
    const Kernel k = build_kernel(parse_kernel_spec(spec));
    Rng rng(2024);
    std::vector<CopyEvent> log;
    VoterOptions options;
    options.event_log = &log;
    const auto end = run_voter(k, init_heavyside(), 30.0, rng, options);
    Naive replay(init_heavyside());
    double last = 0.0;
    for (const auto& e : log) {
      REQUIRE(e.time >= last);
      last = e.time;
      REQUIRE(e.offset != 0);
      const int v = replay.get(e.site + e.offset);
      REQUIRE(replay.get(e.site) != v);
      replay.set(e.site, v);
    }
    CHECK(end.left_zero == replay.l());
    CHECK(end.right_one == replay.r());
    for (std::int64_t x = end.left_zero; x <= end.right_one; ++x) CHECK(end.value(x) == replay.get(x));
    CHECK(end.inversions == interface_stats(end).inversions);
    std::ostringstream csv;
    write_event_log_csv(log, csv);
    CHECK(csv.str().rfind("time,site,offset\n", 0) == 0);
  }
}

TEST_CASE("engine matches the naive Harris simulation in law") {
  compare_with_naive("uniform_range(3)", 6.0, 6000);
  compare_with_naive("power_law(1.2, 24)", 4.0, 6000);
}

TEST_CASE("nearest neighbor interface never opens") {
  const Kernel k = build_kernel(parse_kernel_spec("nearest_neighbor"));
  for (int i = 0; i < 50; ++i) {
    Rng rng = replicate_rng(3, "nn", i);
    const auto s = run_voter(k, init_heavyside(), 100.0, rng);
    CHECK(s.size() == 0);
  }
}

TEST_CASE("observed trajectory and hybrid cap") {
  const Kernel k = build_kernel(parse_kernel_spec("power_law(1.2, 1000)"));
  const VoterDynamics dyn(k);
  Rng rng(4);
  const std::vector<double> times = {1.0, 5.0, 5.0, 20.0};
  const auto snaps = run_voter_observed(dyn, init_heavyside(), times, rng);
  REQUIRE(snaps.size() == 4);
  for (std::size_t i = 0; i < snaps.size(); ++i) {
    CHECK(snaps[i].time == times[i]);
    CHECK_NOTHROW(snaps[i].validate());
  }
  VoterOptions tiny;
  tiny.hybrid_cap = 2;
  Rng rng2(4);
  CHECK_THROWS_AS(run_voter(dyn, init_heavyside(), 500.0, rng2, tiny), HybridCapExceeded);
}
