#include "vmint/dual.hpp"

#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

#include "vmint/walks.hpp"

namespace vmint {

WalkerSet WalkerSet::init(std::span<const std::int64_t> sites) {
  WalkerSet ws;
  const std::size_t n = sites.size();
  ws.parent_.resize(n);
  std::iota(ws.parent_.begin(), ws.parent_.end(), std::int64_t{0});
  ws.site_.assign(sites.begin(), sites.end());
  ws.live_.resize(n);
  std::iota(ws.live_.begin(), ws.live_.end(), std::int64_t{0});
  ws.live_slot_ = ws.live_;
  for (std::size_t i = 0; i < n; ++i) {
    if (!ws.occupancy_.emplace(sites[i], static_cast<std::int64_t>(i)).second)
      throw std::invalid_argument("init_walkers: duplicate site " + std::to_string(sites[i]));
  }
  return ws;
}

std::int64_t WalkerSet::find(std::int64_t id) const {
  while (parent_[static_cast<std::size_t>(id)] != id) id = parent_[static_cast<std::size_t>(id)];
  return id;
}

std::size_t WalkerSet::root_count() const {
  std::size_t roots = 0;
  for (std::size_t i = 0; i < parent_.size(); ++i) roots += parent_[i] == static_cast<std::int64_t>(i);
  return roots;
}

void WalkerSet::remove_live(std::int64_t id) {
  const std::int64_t slot = live_slot_[static_cast<std::size_t>(id)];
  const std::int64_t last = live_.back();
  live_[static_cast<std::size_t>(slot)] = last;
  live_slot_[static_cast<std::size_t>(last)] = slot;
  live_.pop_back();
  live_slot_[static_cast<std::size_t>(id)] = -1;
}

void WalkerSet::evolve(const Kernel& kernel, double duration, Rng& rng) {
  if (!(duration >= 0.0)) throw std::invalid_argument("evolve: duration must be nonnegative");
  const double horizon = clock_ + duration;
  while (!live_.empty()) {
    const double dt = rng.exponential(static_cast<double>(live_.size()));
    if (clock_ + dt > horizon) break;
    clock_ += dt;
    const std::int64_t id = live_[rng.below(live_.size())];
    auto& here = site_[static_cast<std::size_t>(id)];
    const std::int64_t to = here + kernel.sample(rng);
    occupancy_.erase(here);
    here = to;
    auto [it, inserted] = occupancy_.emplace(to, id);
    if (!inserted) {
      // Jumped onto an occupied site: the occupant absorbs the lineage.
      parent_[static_cast<std::size_t>(id)] = it->second;
      remove_live(id);
      merges_.push_back({clock_, id, it->second});
    }
  }
  clock_ = horizon;
}

std::vector<std::pair<std::int64_t, std::int64_t>> WalkerSet::live_sorted() const {
  return {occupancy_.begin(), occupancy_.end()};
}

std::size_t WalkerSet::live_in(std::int64_t lo, std::int64_t hi) const {
  return static_cast<std::size_t>(std::distance(occupancy_.lower_bound(lo), occupancy_.lower_bound(hi)));
}

void WalkerSet::write_merge_csv(std::ostream& out) const {
  out << "merge_time,absorbed_id,surviving_id\n";
  for (const auto& m : merges_) out << format_number(m.time) << ',' << m.absorbed << ',' << m.survivor << '\n';
}

// ---------------------------------------------------------------------------

EstimateReport dual_marginal(const Kernel& kernel, std::int64_t x, double t, std::uint64_t reps,
                             const Streams& streams) {
  if (reps < 1) throw std::invalid_argument("dual_marginal needs reps >= 1");
  StoppingSpec spec{{}, t, false};
  auto ones = run_replicates<char>(streams, reps, [&](std::uint64_t, Rng& rng) {
    return static_cast<char>(run_walk(kernel, x, spec, rng).final_position <= 0);
  });
  std::uint64_t s = 0;
  for (char v : ones) s += static_cast<std::uint64_t>(v);
  EstimateReport r = proportion_report(s, reps);
  r.experiment = "dual_marginal";
  r.seed = streams.master;
  r.with_param("x", static_cast<double>(x)).with_param("t", t);
  return r;
}

std::int64_t density_margin(const Kernel& kernel, double K) {
  return static_cast<std::int64_t>(std::ceil(10.0 * std::sqrt(K) * std::sqrt(kernel.moment(2.0))));
}

EstimateReport density(const Kernel& kernel, double K, std::int64_t window, std::uint64_t reps,
                       const Streams& streams) {
  if (window < 100) throw std::invalid_argument("density needs window >= 100");
  if (!(K >= 0.0)) throw std::invalid_argument("density needs K >= 0");
  const std::int64_t margin = density_margin(kernel, K);
  const std::int64_t core = window - 2 * margin;
  if (core < 1)
    throw std::invalid_argument("density: window " + std::to_string(window) + " leaves no core after margin " +
                                std::to_string(margin));
  std::vector<std::int64_t> sites(static_cast<std::size_t>(window));
  std::iota(sites.begin(), sites.end(), std::int64_t{0});
  auto values = run_replicates<double>(streams, reps, [&](std::uint64_t, Rng& rng) {
    WalkerSet ws = WalkerSet::init(sites);
    ws.evolve(kernel, K, rng);
    return static_cast<double>(ws.live_in(margin, window - margin)) / static_cast<double>(core);
  });
  EstimateReport r = mean_report(values, stream_seed(streams.master, streams.key + "/bootstrap", 0));
  r.experiment = "density";
  r.seed = streams.master;
  r.with_param("K", K).with_param("window", static_cast<double>(window));
  r.with_extra("margin", static_cast<double>(margin));
  return r;
}

std::vector<CrossingEvent> crossing_pairs(const Kernel& kernel, double t, double K, std::int64_t window, Rng& rng) {
  if (t < K) throw std::invalid_argument("crossing_census needs t >= K");
  std::vector<std::int64_t> sites(static_cast<std::size_t>(window));
  std::iota(sites.begin(), sites.end(), -window / 2);
  WalkerSet ws = WalkerSet::init(sites);
  ws.evolve(kernel, K, rng);
  std::vector<CrossingEvent> pairs;
  if (t == K) return pairs;
  const auto live = ws.live_sorted();
  for (std::size_t i = 0; i + 1 < live.size(); ++i) {
    CrossingEvent e;
    e.left_site = live[i].first;
    e.left_id = live[i].second;
    e.right_site = live[i + 1].first;
    e.right_id = live[i + 1].second;
    pairs.push_back(e);
  }
  ws.evolve(kernel, t - K, rng);
  for (auto& e : pairs) {
    e.coalesced = ws.coalesced(e.left_id, e.right_id);
    e.left_final = ws.position(e.left_id);
    e.right_final = ws.position(e.right_id);
    e.crossed = !e.coalesced && e.left_final >= 0 && 0 > e.right_final;
  }
  return pairs;
}

CrossingCensus crossing_census(const Kernel& kernel, double t, double K, std::int64_t window,
                               std::uint64_t reps, const Streams& streams) {
  if (t < K) throw std::invalid_argument("crossing_census needs t >= K");
  if (window < 2) throw std::invalid_argument("crossing_census needs window >= 2");
  struct Rep {
    std::vector<CrossingEvent> crossed;
    std::uint64_t pairs = 0;
  };
  auto results = run_replicates<Rep>(streams, reps, [&](std::uint64_t, Rng& rng) {
    Rep rep;
    auto pairs = crossing_pairs(kernel, t, K, window, rng);
    rep.pairs = pairs.size();
    for (const auto& e : pairs)
      if (e.crossed) rep.crossed.push_back(e);
    return rep;
  });
  CrossingCensus census;
  std::uint64_t positive = 0;
  for (auto& rep : results) {
    positive += !rep.crossed.empty();
    census.pairs_examined += rep.pairs;
    census.crossed.insert(census.crossed.end(), rep.crossed.begin(), rep.crossed.end());
  }
  census.probability = proportion_report(positive, reps);
  census.probability.experiment = "crossing_census";
  census.probability.seed = streams.master;
  census.probability.with_param("t", t).with_param("K", K).with_param("window", static_cast<double>(window));
  census.probability.with_param("scope", std::string("window_lower_bound"));
  census.probability.with_extra("crossed_pairs", static_cast<double>(census.crossed.size()));
  return census;
}

}  // namespace vmint
