#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "vmint/kernel.hpp"
#include "vmint/parallel.hpp"
#include "vmint/rng.hpp"
#include "vmint/stats.hpp"

namespace vmint {

struct MergeRecord {
  double time = 0.0;
  std::int64_t absorbed = 0;
  std::int64_t survivor = 0;
};

/// Coalescing random walks. Walker ids are the indices of the starting
/// sites; a walker that jumps onto an occupied site merges into the occupant.
class WalkerSet {
 public:
  WalkerSet() = default;
  static WalkerSet init(std::span<const std::int64_t> sites);

  /// Runs every live walker at rate 1 for `duration` more units of dual time.
  void evolve(const Kernel& kernel, double duration, Rng& rng);

  double clock() const { return clock_; }
  std::size_t size() const { return parent_.size(); }
  std::size_t live_count() const { return live_.size(); }
  std::size_t root_count() const;

  std::int64_t find(std::int64_t id) const;
  bool coalesced(std::int64_t a, std::int64_t b) const { return find(a) == find(b); }
  /// Current site of the walker carrying id's lineage.
  std::int64_t position(std::int64_t id) const { return site_[static_cast<std::size_t>(find(id))]; }
  /// Live (site, id) pairs in site order.
  std::vector<std::pair<std::int64_t, std::int64_t>> live_sorted() const;
  /// Live walkers with site in [lo, hi).
  std::size_t live_in(std::int64_t lo, std::int64_t hi) const;

  const std::vector<MergeRecord>& merges() const { return merges_; }
  void write_merge_csv(std::ostream& out) const;

 private:
  void remove_live(std::int64_t id);

  double clock_ = 0.0;
  std::map<std::int64_t, std::int64_t> occupancy_;  // site -> live id
  std::vector<std::int64_t> parent_;
  std::vector<std::int64_t> site_;
  std::vector<std::int64_t> live_;
  std::vector<std::int64_t> live_slot_;  // id -> index in live_, -1 once merged
  std::vector<MergeRecord> merges_;
};

inline WalkerSet init_walkers(std::span<const std::int64_t> sites) { return WalkerSet::init(sites); }

/// P(eta_t(x) = 1) through the dual walk: P(X^{x,t}_t <= 0).
EstimateReport dual_marginal(const Kernel& kernel, std::int64_t x, double t, std::uint64_t reps,
                             const Streams& streams);

/// Walkers from every site of [0, window) evolved for K; live walkers in the
/// core (margin ceil(10 sqrt(K) sigma) cut at each end) over core length.
/// The interval is a bootstrap percentile interval of the replicate mean.
EstimateReport density(const Kernel& kernel, double K, std::int64_t window, std::uint64_t reps,
                       const Streams& streams);
std::int64_t density_margin(const Kernel& kernel, double K);

struct CrossingEvent {
  std::int64_t left_id = 0;
  std::int64_t right_id = 0;
  std::int64_t left_site = 0;   // w, position at dual time K
  std::int64_t right_site = 0;  // z
  bool crossed = false;
  bool coalesced = false;
  std::int64_t left_final = 0;
  std::int64_t right_final = 0;
};

/// Neighbor survivor pairs at dual time K, followed to dual time t.
std::vector<CrossingEvent> crossing_pairs(const Kernel& kernel, double t, double K, std::int64_t window, Rng& rng);

struct CrossingCensus {
  /// Window-restricted P(A_K(t) > 0); a lower bound for the full-lattice event.
  EstimateReport probability;
  /// Crossed pairs over all replicates, in replicate order.
  std::vector<CrossingEvent> crossed;
  std::uint64_t pairs_examined = 0;
};

/// Walkers start from every site of [-window/2, window/2). Requires t >= K.
CrossingCensus crossing_census(const Kernel& kernel, double t, double K, std::int64_t window,
                               std::uint64_t reps, const Streams& streams);

}  // namespace vmint
