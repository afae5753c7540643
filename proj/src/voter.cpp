#include "vmint/voter.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <ostream>
#include <string>

#include "vmint/stats.hpp"

namespace vmint {

int InterfaceState::value(std::int64_t x) const {
  if (x < left_zero) return 1;
  if (x > right_one) return 0;
  return hybrid[static_cast<std::size_t>(x - left_zero)];
}

void InterfaceState::validate() const {
  if (right_one < left_zero - 1) throw std::logic_error("interface state: r < l - 1");
  if (static_cast<std::int64_t>(hybrid.size()) != std::max<std::int64_t>(0, size()))
    throw std::logic_error("interface state: hybrid length does not match [l, r]");
  if (!hybrid.empty() && (hybrid.front() != 0 || hybrid.back() != 1))
    throw std::logic_error("interface state: hybrid must start with 0 and end with 1");
  if (count_inversions(hybrid) != inversions) throw std::logic_error("interface state: inversion count is stale");
}

InterfaceState init_heavyside() { return InterfaceState{}; }

std::uint64_t count_inversions(std::span<const std::uint8_t> bits) {
  std::uint64_t zeros = 0, total = 0;
  for (std::uint8_t b : bits) {
    if (b)
      total += zeros;
    else
      ++zeros;
  }
  return total;
}

InterfaceStats interface_stats(const InterfaceState& state) {
  return {state.left_zero, state.right_one, std::max<std::int64_t>(0, state.size()), count_inversions(state.hybrid)};
}

// ---------------------------------------------------------------------------

VoterLattice::VoterLattice(const InterfaceState& state, std::int64_t margin, bool track_inversions)
    : l_(state.left_zero), r_(state.right_one), inversions_(state.inversions),
      margin_(std::max<std::int64_t>(1, margin)), track_inversions_(track_inversions) {
  const std::int64_t width = std::max<std::int64_t>(0, state.size());
  const std::int64_t span = width + 2 * margin_;
  const std::size_t n = std::bit_ceil(static_cast<std::size_t>(std::max<std::int64_t>(1024, 2 * span)));
  base_ = l_ - margin_ - (static_cast<std::int64_t>(n) - span) / 2;
  vals_.assign(n, 0);
  for (std::int64_t x = base_; x < l_; ++x) vals_[static_cast<std::size_t>(x - base_)] = 1;
  for (std::int64_t i = 0; i < width; ++i) vals_[static_cast<std::size_t>(l_ - base_ + i)] = state.hybrid[static_cast<std::size_t>(i)];
  tree_.assign(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    tree_[i] += vals_[i - 1];
    const std::size_t parent = i + (i & (~i + 1));
    if (parent <= n) tree_[parent] += tree_[i];
  }
}

void VoterLattice::fenwick_add(std::size_t index, int delta) {
  for (std::size_t i = index; i < tree_.size(); i += i & (~i + 1)) tree_[i] += delta;
}

std::int64_t VoterLattice::ones_through(std::int64_t x) const {
  if (x < base_) return 0;
  std::size_t i = static_cast<std::size_t>(std::min<std::int64_t>(x - base_ + 1, static_cast<std::int64_t>(vals_.size())));
  std::int64_t sum = 0;
  for (; i > 0; i -= i & (~i + 1)) sum += tree_[i];
  return sum;
}

std::int64_t VoterLattice::ones_between(std::int64_t a, std::int64_t b) const {
  if (b < a) return 0;
  return ones_through(b) - ones_through(a - 1);
}

std::int64_t VoterLattice::kth_one(std::int64_t k) const {
  std::size_t pos = 0;
  for (std::size_t step = vals_.size(); step > 0; step >>= 1) {
    if (pos + step < tree_.size() && tree_[pos + step] < k) {
      pos += step;
      k -= tree_[pos];
    }
  }
  return base_ + static_cast<std::int64_t>(pos);
}

std::int64_t VoterLattice::kth_zero(std::int64_t k) const {
  std::size_t pos = 0;
  for (std::size_t step = vals_.size(); step > 0; step >>= 1) {
    if (pos + step < tree_.size()) {
      const std::int64_t zeros = static_cast<std::int64_t>(step) - tree_[pos + step];
      if (zeros < k) {
        pos += step;
        k -= zeros;
      }
    }
  }
  return base_ + static_cast<std::int64_t>(pos);
}

void VoterLattice::ensure_covered(std::int64_t lo, std::int64_t hi) {
  const std::int64_t end = base_ + static_cast<std::int64_t>(vals_.size());
  if (lo >= base_ && hi < end) return;
  const std::int64_t new_lo = std::min(lo, base_);
  const std::int64_t new_hi = std::max(hi, end - 1);
  const std::int64_t span = new_hi - new_lo + 1;
  const std::size_t n = std::bit_ceil(static_cast<std::size_t>(2 * span));
  const std::int64_t new_base = new_lo - (static_cast<std::int64_t>(n) - span) / 2;
  std::vector<std::uint8_t> fresh(n, 0);
  for (std::int64_t x = new_base; x < base_; ++x) fresh[static_cast<std::size_t>(x - new_base)] = 1;
  std::copy(vals_.begin(), vals_.end(), fresh.begin() + (base_ - new_base));
  vals_ = std::move(fresh);
  base_ = new_base;
  tree_.assign(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    tree_[i] += vals_[i - 1];
    const std::size_t parent = i + (i & (~i + 1));
    if (parent <= n) tree_[parent] += tree_[i];
  }
}

bool VoterLattice::set(std::int64_t x, int v) {
  if (value(x) == v) return false;
  ensure_covered(std::min(x - margin_, l_ - margin_), std::max(x + margin_, r_ + margin_));
  if (track_inversions_) {
    // Zeros on [l, x) pair with x as a one, ones on (x, r] pair with x as a zero.
    const std::int64_t zeros_left = x > l_ ? (x - l_) - ones_between(l_, x - 1) : 0;
    const std::int64_t ones_right = x < r_ ? ones_between(x + 1, r_) : 0;
    if (v == 1)
      inversions_ = inversions_ + static_cast<std::uint64_t>(zeros_left) - static_cast<std::uint64_t>(ones_right);
    else
      inversions_ = inversions_ + static_cast<std::uint64_t>(ones_right) - static_cast<std::uint64_t>(zeros_left);
  }
  const std::size_t idx = static_cast<std::size_t>(x - base_);
  vals_[idx] = static_cast<std::uint8_t>(v);
  fenwick_add(idx + 1, v == 1 ? 1 : -1);

  if (v == 1) {
    if (x > r_) r_ = x;
    if (x == l_) {
      // No zero lies below l, so the first zero in the window is the new l.
      l_ = kth_zero(1);
    }
  } else {
    if (x < l_) l_ = x;
    if (x == r_) {
      const std::int64_t below = ones_through(x - 1);
      r_ = kth_one(below);
    }
  }
  ensure_covered(l_ - margin_, r_ + margin_);
  return true;
}

InterfaceState VoterLattice::snapshot(double time) const {
  InterfaceState s;
  s.time = time;
  s.left_zero = l_;
  s.right_one = r_;
  if (r_ >= l_) s.hybrid.assign(vals_.begin() + (l_ - base_), vals_.begin() + (r_ - base_ + 1));
  s.inversions = track_inversions_ ? inversions_ : count_inversions(s.hybrid);
  return s;
}

std::int64_t VoterLattice::best_split() const {
  // cost(s) = zeros in [l, s) + ones in [s, r]; walk s from l to r + 1.
  std::int64_t cost = ones_between(l_, r_);
  std::int64_t best = cost, best_s = l_;
  for (std::int64_t x = l_; x <= r_; ++x) {
    cost += vals_[static_cast<std::size_t>(x - base_)] ? -1 : 1;
    if (cost < best) {
      best = cost;
      best_s = x + 1;
    }
  }
  return best_s;
}

// ---------------------------------------------------------------------------

namespace {

// Each discordant ordered pair (target x, source y) fires at rate p(y - x).
//
// Pairs with |y - x| <= R are kept in one list per distance d, so a near
// event picks d with weight (#pairs at d)(p(d) + p(-d)), a uniform pair, and
// an orientation; it always flips a site.
//
// Longer pairs are proposed at a dominating rate and thinned. Relative to a
// split point s in [l, r + 1], with Y drawn from the far part of p:
//   zero targets left of s        : pick a zero x < s, y = x + Y
//   zero sources left of s        : pick a zero y < s, x = y - Y, x < s
//   one targets right of s        : pick a one x >= s, y = x + Y
//   one sources right of s        : pick a one y >= s, x = y - Y, x >= s
//   crossing one -> zero (y<s<=x) : d ~ d p(-d), y uniform in [s - d, s)
//   crossing zero -> one (x<s<=y) : d ~ d p(d),  x uniform in [s - d, s)
// Every flip is proposed by exactly one family at exactly its Harris rate.
// s is re-chosen to minimize the number of listed sites every so often.
class Engine {
 public:
  Engine(const VoterDynamics& dynamics, const InterfaceState& state, const VoterOptions& options)
      : range_(dynamics.near_range()), far_(dynamics.far()),
        lattice_(state, range_ + 1, options.track_inversions), options_(options), time_(state.time) {
    far_mass_ = far_.total_mass();
    m_plus_ = far_.positive_first_moment();
    m_minus_ = far_.negative_first_moment();
    p_plus_.resize(static_cast<std::size_t>(range_ + 1));
    p_minus_.resize(static_cast<std::size_t>(range_ + 1));
    for (std::int64_t d = 1; d <= range_; ++d) {
      p_plus_[static_cast<std::size_t>(d)] = dynamics.near_mass(d);
      p_minus_[static_cast<std::size_t>(d)] = dynamics.near_mass(-d);
    }
    pairs_.resize(static_cast<std::size_t>(range_ + 1));
    pair_slot_.resize(static_cast<std::size_t>(range_ + 1));
    rebuild();
  }

  void advance(double horizon, Rng& rng) {
    for (;;) {
      if (++since_split_ > 4 * (lattice_.right_one() - lattice_.left_zero() + 16)) rebuild();
      double near = 0.0;
      for (std::int64_t d = 1; d <= range_; ++d) {
        const auto i = static_cast<std::size_t>(d);
        near += static_cast<double>(pairs_[i].size()) * (p_plus_[i] + p_minus_[i]);
      }
      const double zl = static_cast<double>(zeros_left_.size()) * far_mass_;
      const double orr = static_cast<double>(ones_right_.size()) * far_mass_;
      const double total = near + 2.0 * (zl + orr) + m_plus_ + m_minus_;
      if (!(total > 0.0)) {
        time_ = horizon;
        return;
      }
      const double dt = rng.exponential(total);
      if (time_ + dt > horizon) {
        time_ = horizon;
        return;
      }
      time_ += dt;
      double u = rng.uniform() * total;
      if (u < near) {
        near_event(u);
        continue;
      }
      u -= near;
      const std::int64_t s = split_;
      if (u < 2.0 * zl) {
        // The residual of u picks the listed site and which half fires.
        const auto [at, half] = residual_pick(u / (2.0 * far_mass_), zeros_left_.size());
        const std::int64_t picked = zeros_left_[at];
        if (half < 0.5) {
          const std::int64_t y = picked + far_.sample(rng);
          if (lattice_.value(y) == 1) flip(picked, y);
        } else {
          const std::int64_t x = picked - far_.sample(rng);
          if (x < s && lattice_.value(x) == 1) flip(x, picked);
        }
        continue;
      }
      u -= 2.0 * zl;
      if (u < 2.0 * orr) {
        const auto [at, half] = residual_pick(u / (2.0 * far_mass_), ones_right_.size());
        const std::int64_t picked = ones_right_[at];
        if (half < 0.5) {
          const std::int64_t y = picked + far_.sample(rng);
          if (lattice_.value(y) == 0) flip(picked, y);
        } else {
          const std::int64_t x = picked - far_.sample(rng);
          if (x >= s && lattice_.value(x) == 0) flip(x, picked);
        }
        continue;
      }
      u -= 2.0 * orr;
      if (u < m_minus_) {
        const std::int64_t d = far_.sample_size_biased(TailSide::negative, rng);
        const std::int64_t y = s - d + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(d)));
        const std::int64_t x = y + d;
        if (lattice_.value(y) == 1 && lattice_.value(x) == 0) flip(x, y);
      } else if (m_plus_ > 0.0) {
        const std::int64_t d = far_.sample_size_biased(TailSide::positive, rng);
        const std::int64_t x = s - d + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(d)));
        const std::int64_t y = x + d;
        if (lattice_.value(x) == 1 && lattice_.value(y) == 0) flip(x, y);
      }
    }
  }

  double time() const { return time_; }
  const VoterLattice& lattice() const { return lattice_; }

 private:
  // v uniform on [0, n): the integer part indexes a list, the fraction is a
  // fresh uniform.
  static std::pair<std::size_t, double> residual_pick(double v, std::size_t n) {
    const auto at = std::min(static_cast<std::size_t>(v), n - 1);
    return {at, v - static_cast<double>(at)};
  }

  void near_event(double u) {
    for (std::int64_t d = 1; d <= range_; ++d) {
      const auto i = static_cast<std::size_t>(d);
      const double both = p_plus_[i] + p_minus_[i];
      const double w = static_cast<double>(pairs_[i].size()) * both;
      if (u < w || d == range_) {
        if (pairs_[i].empty()) return;
        const auto [at, frac] = residual_pick(u / both, pairs_[i].size());
        const std::int64_t a = pairs_[i][at];
        // a copies a + d at rate p(d); a + d copies a at rate p(-d).
        if (frac * both < p_plus_[i])
          flip(a, a + d);
        else
          flip(a + d, a);
        return;
      }
      u -= w;
    }
  }

  void rebuild() {
    split_ = lattice_.best_split();
    since_split_ = 0;
    const std::size_t n = lattice_.window();
    if (lattice_.base() != slot_base_ || slot_.size() != n) {
      slot_base_ = lattice_.base();
      slot_.assign(n, -1);
      for (auto& slots : pair_slot_) slots.assign(n, -1);
    } else {
      clear(zeros_left_, slot_);
      clear(ones_right_, slot_);
      for (std::size_t i = 1; i < pairs_.size(); ++i) clear(pairs_[i], pair_slot_[i]);
    }
    zeros_left_.clear();
    ones_right_.clear();
    const std::int64_t l = lattice_.left_zero(), r = lattice_.right_one();
    for (std::int64_t x = l; x <= r; ++x) {
      const int v = lattice_.value(x);
      if (x < split_ && v == 0) add(zeros_left_, slot_, x);
      if (x >= split_ && v == 1) add(ones_right_, slot_, x);
    }
    for (std::int64_t d = 1; d <= range_; ++d) {
      const auto i = static_cast<std::size_t>(d);
      pairs_[i].clear();
      for (std::int64_t a = l - d; a <= r; ++a)
        if (lattice_.value(a) != lattice_.value(a + d)) add(pairs_[i], pair_slot_[i], a);
    }
  }

  void clear(std::vector<std::int64_t>& list, std::vector<std::int32_t>& slot) {
    for (std::int64_t x : list) slot[static_cast<std::size_t>(x - slot_base_)] = -1;
    list.clear();
  }

  void add(std::vector<std::int64_t>& list, std::vector<std::int32_t>& slot, std::int64_t x) {
    slot[static_cast<std::size_t>(x - slot_base_)] = static_cast<std::int32_t>(list.size());
    list.push_back(x);
  }

  void remove(std::vector<std::int64_t>& list, std::vector<std::int32_t>& slot, std::int64_t x) {
    const std::int32_t at = slot[static_cast<std::size_t>(x - slot_base_)];
    const std::int64_t moved = list.back();
    list[static_cast<std::size_t>(at)] = moved;
    slot[static_cast<std::size_t>(moved - slot_base_)] = at;
    list.pop_back();
    slot[static_cast<std::size_t>(x - slot_base_)] = -1;
  }

  void toggle(std::vector<std::int64_t>& list, std::vector<std::int32_t>& slot, std::int64_t x) {
    if (slot[static_cast<std::size_t>(x - slot_base_)] >= 0)
      remove(list, slot, x);
    else
      add(list, slot, x);
  }

  void flip(std::int64_t x, std::int64_t y) {
    lattice_.apply_copy(x, y);
    if (options_.event_log) options_.event_log->push_back({time_, x, y - x});
    const std::int64_t l = lattice_.left_zero(), r = lattice_.right_one();
    if (r - l + 1 > options_.hybrid_cap)
      throw HybridCapExceeded("hybrid zone exceeded cap (" + std::to_string(r - l + 1) + " > " +
                              std::to_string(options_.hybrid_cap) + ")");
    if (lattice_.base() != slot_base_ || split_ < l || split_ > r + 1) {
      rebuild();
      return;
    }
    // Every pair containing x changed its discordance.
    for (std::int64_t d = 1; d <= range_; ++d) {
      const auto i = static_cast<std::size_t>(d);
      toggle(pairs_[i], pair_slot_[i], x - d);
      toggle(pairs_[i], pair_slot_[i], x);
    }
    const int v = lattice_.value(x);
    if (x < split_) {
      if (v == 1)
        remove(zeros_left_, slot_, x);
      else
        add(zeros_left_, slot_, x);
    } else {
      if (v == 1)
        add(ones_right_, slot_, x);
      else
        remove(ones_right_, slot_, x);
    }
  }

  std::int64_t range_;
  const Kernel& far_;
  VoterLattice lattice_;
  const VoterOptions& options_;
  double time_;
  double far_mass_ = 0.0, m_plus_ = 0.0, m_minus_ = 0.0;
  std::vector<double> p_plus_, p_minus_;
  std::int64_t split_ = 1;
  std::int64_t since_split_ = 0;
  std::int64_t slot_base_ = std::numeric_limits<std::int64_t>::min();
  std::vector<std::int64_t> zeros_left_, ones_right_;
  std::vector<std::int32_t> slot_;
  std::vector<std::vector<std::int64_t>> pairs_;
  std::vector<std::vector<std::int32_t>> pair_slot_;
};

}  // namespace

VoterDynamics::VoterDynamics(const Kernel& kernel, std::int64_t near_range)
    : kernel_(kernel), range_(std::clamp<std::int64_t>(near_range, 0, kernel.radius())) {
  if (kernel.empty()) throw std::invalid_argument("voter dynamics: empty kernel");
  far_ = range_ > 0 ? split_at(kernel, range_).far : kernel;
  near_.assign(static_cast<std::size_t>(2 * range_ + 1), 0.0);
  for (std::int64_t d = -range_; d <= range_; ++d)
    if (d != 0) near_[static_cast<std::size_t>(range_ + d)] = kernel.mass(d);
}

std::vector<InterfaceState> run_voter_observed(const VoterDynamics& dynamics, const InterfaceState& state,
                                               std::span<const double> times, Rng& rng,
                                               const VoterOptions& options) {
  Engine engine(dynamics, state, options);
  std::vector<InterfaceState> out;
  out.reserve(times.size());
  double last = state.time;
  for (double t : times) {
    if (!(t >= last)) throw std::invalid_argument("run_voter: observation times must be nondecreasing and >= state time");
    engine.advance(t, rng);
    out.push_back(engine.lattice().snapshot(t));
    last = t;
  }
  return out;
}

InterfaceState run_voter(const VoterDynamics& dynamics, const InterfaceState& state, double horizon, Rng& rng,
                         const VoterOptions& options) {
  const double t[] = {horizon};
  return std::move(run_voter_observed(dynamics, state, t, rng, options).front());
}

InterfaceState run_voter(const Kernel& kernel, const InterfaceState& state, double horizon, Rng& rng,
                         const VoterOptions& options) {
  return run_voter(VoterDynamics(kernel), state, horizon, rng, options);
}

BoundaryRates exterior_flip_rates(const InterfaceState& state, const Kernel& kernel) {
  BoundaryRates rates;
  const std::int64_t l = state.left_zero, r = state.right_one;
  for (std::int64_t x = l; x <= r; ++x) {
    if (state.hybrid[static_cast<std::size_t>(x - l)] == 0)
      rates.left += kernel.tail_mass(x - l + 1, TailSide::positive);
    else
      rates.right += kernel.tail_mass(r + 1 - x, TailSide::negative);
  }
  rates.left += kernel.double_tail(r - l + 2, TailSide::positive);
  rates.right += kernel.double_tail(r - l + 2, TailSide::negative);
  return rates;
}

void write_event_log_csv(std::span<const CopyEvent> events, std::ostream& out) {
  out << "time,site,offset\n";
  for (const auto& e : events) out << format_number(e.time) << ',' << e.site << ',' << e.offset << '\n';
}

}  // namespace vmint
