#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vmint/kernel.hpp"
#include "vmint/parallel.hpp"
#include "vmint/rng.hpp"
#include "vmint/stats.hpp"

namespace vmint {

class WalkSpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A set of integers a walk can be stopped on.
struct Target {
  enum class Kind { point, at_most, at_least, outside };
  Kind kind = Kind::point;
  std::int64_t a = 0;
  std::int64_t b = 0;

  static Target point(std::int64_t x) { return {Kind::point, x, x}; }
  /// (-inf, a]
  static Target at_most(std::int64_t a) { return {Kind::at_most, a, a}; }
  /// [b, +inf)
  static Target at_least(std::int64_t b) { return {Kind::at_least, b, b}; }
  /// Complement of the open interval (lo, hi).
  static Target outside(std::int64_t lo, std::int64_t hi) { return {Kind::outside, lo, hi}; }

  bool contains(std::int64_t x) const {
    switch (kind) {
      case Kind::point: return x == a;
      case Kind::at_most: return x <= a;
      case Kind::at_least: return x >= b;
      case Kind::outside: return x <= a || x >= b;
    }
    return false;
  }
};

struct StoppingSpec {
  std::vector<Target> targets;
  /// Continuous time for the timed walk; a jump count for the embedded chain.
  std::optional<double> horizon;
  /// Ignore the starting position: targets only count after the first jump.
  bool strict_return = false;

  void validate() const;
};

inline constexpr int kHorizonExpired = -1;

struct WalkOutcome {
  int first_hit = kHorizonExpired;
  /// Continuous clock, or number of jumps for the embedded chain.
  double hit_time = 0.0;
  std::int64_t final_position = 0;
  /// Time (or visit count) per site before stopping; filled only when tracked.
  std::map<std::int64_t, double> occupation;

  bool expired() const { return first_hit == kHorizonExpired; }
};

/// Continuous-time walk jumping at `rate` with steps drawn from `kernel`.
WalkOutcome run_walk(const Kernel& kernel, std::int64_t start, const StoppingSpec& spec, Rng& rng,
                     bool track_occupation = false, double rate = 1.0);

/// Embedded jump chain; the horizon and hit_time count jumps.
WalkOutcome run_chain(const Kernel& kernel, std::int64_t start, const StoppingSpec& spec, Rng& rng,
                      bool track_occupation = false);

/// Z = Y1 - Y2 for two independent rate-1 p-walks, simulated directly as a
/// rate-2 walk with the symmetrized step law.
class DifferenceWalk {
 public:
  explicit DifferenceWalk(const Kernel& kernel) : step_(symmetrize(kernel)) {}

  const Kernel& step_kernel() const { return step_; }
  static constexpr double rate() { return 2.0; }

  WalkOutcome run(std::int64_t start_gap, const StoppingSpec& spec, Rng& rng,
                  bool track_occupation = false) const {
    return run_walk(step_, start_gap, spec, rng, track_occupation, rate());
  }
  WalkOutcome run_chain(std::int64_t start_gap, const StoppingSpec& spec, Rng& rng) const {
    return vmint::run_chain(step_, start_gap, spec, rng);
  }

 private:
  Kernel step_;
};

WalkOutcome run_difference_walk(const Kernel& kernel, std::int64_t start_gap, const StoppingSpec& spec,
                                Rng& rng);

/// P^start(tau_A < tau_B) on the embedded chain, with a Wilson interval.
EstimateReport hit_before(const Kernel& kernel, std::int64_t start, const Target& target_a,
                          const Target& target_b, std::uint64_t reps, const Streams& streams,
                          bool strict_return = false);

// ---------------------------------------------------------------------------
// Exact finite-interval solves.

class ExactSolveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Maps an exterior site to its class index in [0, classes).
using ExteriorPartition = std::function<int(std::int64_t)>;

/// Classes {<= lo} -> 0 and {>= hi} -> 1.
ExteriorPartition two_sided_partition(std::int64_t lo, std::int64_t hi);

struct ExactSolveOptions {
  std::size_t max_unknowns = 4000;
  double residual_tolerance = 1e-8;
};

/// Absorption probabilities and the killed green function of the embedded
/// chain on the open interval (lo, hi), by dense LU on (I - Q).
template <typename Scalar = double>
class ExactSolve {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  ExactSolve(const Kernel& kernel, std::int64_t lo, std::int64_t hi, ExteriorPartition partition,
             int classes, ExactSolveOptions options = {});

  std::int64_t lo() const { return lo_; }
  std::int64_t hi() const { return hi_; }
  Eigen::Index unknowns() const { return static_cast<Eigen::Index>(hi_ - lo_ - 1); }
  int classes() const { return classes_; }

  Scalar absorption(std::int64_t start, int cls) const { return absorption_(index(start), cls); }
  /// Expected visits to l before leaving the interval, starting from x.
  Scalar green(std::int64_t x, std::int64_t l) const { return green_(index(x), index(l)); }
  /// Expected occupation time for a walk jumping at `rate`.
  Scalar occupation(std::int64_t x, std::int64_t l, double rate) const {
    return green(x, l) / static_cast<Scalar>(rate);
  }
  /// P^x(tau_l < tau_exit), from a separate solve with l made absorbing.
  Scalar hit_before_exit(std::int64_t x, std::int64_t l) const;
  /// P^l(tau_exit < strict return to l).
  Scalar escape_before_return(std::int64_t l) const;

  const Matrix& green_matrix() const { return green_; }
  const Matrix& absorption_matrix() const { return absorption_; }
  void write_csv(std::ostream& out) const;

 private:
  Eigen::Index index(std::int64_t x) const;
  Vector hit_vector(std::int64_t l) const;

  Kernel kernel_;
  std::int64_t lo_, hi_;
  int classes_;
  ExactSolveOptions options_;
  Matrix green_;
  Matrix absorption_;
};

extern template class ExactSolve<double>;
extern template class ExactSolve<long double>;

ExactSolve<double> exact_solve(const Kernel& kernel, std::int64_t lo, std::int64_t hi,
                               ExteriorPartition partition, int classes, ExactSolveOptions options = {});

// ---------------------------------------------------------------------------

class WindowOverflow : public std::runtime_error {
 public:
  WindowOverflow(const std::string& what, std::int64_t required) : std::runtime_error(what), required_(required) {}
  std::int64_t required_window() const { return required_; }

 private:
  std::int64_t required_;
};

struct PotentialKernelValue {
  double value = 0.0;
  double last_increment = 0.0;
  std::uint64_t terms = 0;
};

/// Truncated series a(x) = sum_{i<terms} (P^0(X_i=0) - P^x(X_i=0)) by exact
/// convolution of the step law on [-window, window]. A window of 0 picks one
/// from the kernel spread.
PotentialKernelValue potential_kernel(const Kernel& kernel, std::int64_t x, std::uint64_t terms,
                                      std::int64_t window = 0);

struct ReturnTail {
  EstimateReport continuous;  // P^0(strict return time >= n^2)
  EstimateReport embedded;    // P^0(strict return > n^2 jumps)
};

ReturnTail return_tail(const Kernel& kernel, std::int64_t n, std::uint64_t reps, const Streams& streams);

/// P^x(tau_0 > t) for the rate-1 walk; extra "normalized_ratio" divides by
/// min(|x| / sqrt(t), 1).
EstimateReport survival_from(const Kernel& kernel, std::int64_t x, double t, std::uint64_t reps,
                             const Streams& streams);

}  // namespace vmint
