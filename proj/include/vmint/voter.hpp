#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "vmint/kernel.hpp"
#include "vmint/rng.hpp"

namespace vmint {

/// Voter configuration compressed to its hybrid zone [l, r]. Sites left of l
/// hold 1 and sites right of r hold 0; when r = l - 1 the configuration is
/// sorted and the hybrid is empty.
struct InterfaceState {
  double time = 0.0;
  std::int64_t left_zero = 1;   // l_t
  std::int64_t right_one = 0;   // r_t
  std::vector<std::uint8_t> hybrid;
  std::uint64_t inversions = 0;  // B_t

  int value(std::int64_t x) const;
  /// r - l + 1, zero for a sorted configuration.
  std::int64_t size() const { return right_one - left_zero + 1; }
  /// Throws std::logic_error when the representation invariants fail.
  void validate() const;
};

InterfaceState init_heavyside();

struct InterfaceStats {
  std::int64_t l = 0;
  std::int64_t r = 0;
  std::int64_t size = 0;
  std::uint64_t inversions = 0;
};

/// B is recounted from the hybrid bits, not read from the state.
InterfaceStats interface_stats(const InterfaceState& state);
std::uint64_t count_inversions(std::span<const std::uint8_t> bits);

/// Site `site` adopts the value found at `site + offset`.
struct CopyEvent {
  double time = 0.0;
  std::int64_t site = 0;
  std::int64_t offset = 0;
};

class HybridCapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct VoterOptions {
  std::int64_t hybrid_cap = std::int64_t{1} << 20;
  /// When set, every value-changing copy is appended here.
  std::vector<CopyEvent>* event_log = nullptr;
  /// When false, B is counted from the bits at each observation instead of
  /// being maintained after every flip.
  bool track_inversions = true;
};

/// The kernel prepared for the simulator, built once and shared by replicates.
/// Jumps with |d| <= near_range are drawn from exact lists of discordant
/// pairs; longer jumps are proposed from the far part of p and thinned.
class VoterDynamics {
 public:
  explicit VoterDynamics(const Kernel& kernel, std::int64_t near_range = 4);

  const Kernel& kernel() const { return kernel_; }
  const Kernel& far() const { return far_; }
  std::int64_t near_range() const { return range_; }
  double near_mass(std::int64_t d) const { return near_[static_cast<std::size_t>(range_ + d)]; }

 private:
  Kernel kernel_;
  Kernel far_;
  std::int64_t range_;
  std::vector<double> near_;
};

/// Evolves the configuration to `horizon` under the Harris dynamics: each
/// site rings at rate 1 and copies the value at an offset drawn from p.
InterfaceState run_voter(const Kernel& kernel, const InterfaceState& state, double horizon, Rng& rng,
                         const VoterOptions& options = {});

InterfaceState run_voter(const VoterDynamics& dynamics, const InterfaceState& state, double horizon, Rng& rng,
                         const VoterOptions& options = {});

/// One trajectory observed at each of the nondecreasing `times`.
std::vector<InterfaceState> run_voter_observed(const VoterDynamics& dynamics, const InterfaceState& state,
                                               std::span<const double> times, Rng& rng,
                                               const VoterOptions& options = {});

/// Aggregate flip rates of the sites left of l (1 -> 0) and right of r
/// (0 -> 1), from one- and two-fold tail sums of the kernel.
struct BoundaryRates {
  double left = 0.0;
  double right = 0.0;
};
BoundaryRates exterior_flip_rates(const InterfaceState& state, const Kernel& kernel);

void write_event_log_csv(std::span<const CopyEvent> events, std::ostream& out);

/// Windowed lattice behind the simulator. Holds the true values on a covered
/// range containing [l - 1, r + 1], a Fenwick tree of ones for order
/// statistics, and l, r, B maintained incrementally.
class VoterLattice {
 public:
  /// The window always covers [l - margin, r + margin].
  explicit VoterLattice(const InterfaceState& state, std::int64_t margin = 1, bool track_inversions = true);

  int value(std::int64_t x) const {
    if (x < base_) return 1;
    if (x >= base_ + static_cast<std::int64_t>(vals_.size())) return 0;
    return vals_[static_cast<std::size_t>(x - base_)];
  }
  std::int64_t left_zero() const { return l_; }
  /// First site of the covered window and its length.
  std::int64_t base() const { return base_; }
  std::size_t window() const { return vals_.size(); }
  std::int64_t right_one() const { return r_; }
  std::uint64_t inversions() const { return inversions_; }

  /// Sets site x to v, updating l, r and B. Returns whether the value changed.
  bool set(std::int64_t x, int v);
  /// Replays one copy event.
  bool apply_copy(std::int64_t site, std::int64_t source) { return set(site, value(source)); }

  /// Ones in [a, b]; both ends inside the covered range.
  std::int64_t ones_between(std::int64_t a, std::int64_t b) const;
  /// Ones in the window up to and including x.
  std::int64_t ones_through(std::int64_t x) const;
  /// Position of the k-th one (k >= 1) counted from the covered base.
  std::int64_t kth_one(std::int64_t k) const;
  /// Position of the k-th zero (k >= 1) counted from the covered base.
  std::int64_t kth_zero(std::int64_t k) const;

  InterfaceState snapshot(double time) const;
  /// Split point minimizing zeros in [l, s) plus ones in [s, r].
  std::int64_t best_split() const;

 private:
  void ensure_covered(std::int64_t lo, std::int64_t hi);
  void fenwick_add(std::size_t index, int delta);

  std::int64_t base_ = 0;
  std::vector<std::uint8_t> vals_;
  std::vector<std::int32_t> tree_;
  std::int64_t l_ = 1;
  std::int64_t r_ = 0;
  std::uint64_t inversions_ = 0;
  std::int64_t margin_ = 1;
  bool track_inversions_ = true;
};

}  // namespace vmint
