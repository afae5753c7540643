#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "vmint/kernel.hpp"
#include "vmint/parallel.hpp"
#include "vmint/stats.hpp"
#include "vmint/voter.hpp"
#include "vmint/walks.hpp"

namespace vmint {

class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// P^k(Z(t) < 0, tau_0 > t) for the difference walk; extra "normalized_ratio"
/// divides by k / sqrt(t).
EstimateReport exp_Vk(const Kernel& kernel, std::int64_t k, double t, std::uint64_t reps, const Streams& streams);

/// P^k(A(k,r)) on the embedded difference chain; extra "scaled" is 2^r P.
EstimateReport exp_Akr(const Kernel& kernel, std::int64_t k, int r, std::uint64_t reps, const Streams& streams);

/// P^k(A(k,r)) from two exact solves: the exit law of (0, k 2^r), then
/// absorption on (0, k 2^(r+1)) from each exit site.
double exact_Akr(const Kernel& kernel, std::int64_t k, int r, ExactSolveOptions options = {});

struct OvershootReport {
  EstimateReport mean_overshoot;  // E^k|Z(tau_(-inf,0])|, extra "per_k"
  EstimateReport exit_far;        // P^k(Z at exit of (0, k2^r) > 3k2^r/2), extra "scaled"
};
OvershootReport exp_overshoot(const Kernel& kernel, std::int64_t k, int r, std::uint64_t reps, const Streams& streams,
                              std::uint64_t step_cap = 100'000'000);

struct UkFarReport {
  EstimateReport joint;         // U_k(t) and a walker beyond m sqrt(t)
  EstimateReport no_collision;  // U_k(t)
  EstimateReport tail;          // |Y^0(2t)| >= m sqrt(t)
  double ratio = 0.0;
};
UkFarReport exp_Uk_far(const Kernel& kernel, std::int64_t k, double m, double t, std::uint64_t reps,
                       const Streams& streams);

struct ExcursionReport {
  EstimateReport long_excursion;   // E_1
  EstimateReport reach_given_long; // |Z| >= |k| before k^2, given no return before 3t/2
};
ExcursionReport exp_excursion(const Kernel& kernel, std::int64_t k, double t, std::uint64_t reps,
                              const Streams& streams);

struct TightnessTable {
  std::vector<double> times;
  std::vector<std::int64_t> levels;
  std::vector<EstimateReport> survival;     // P(r_t - l_t > M), t-major
  std::vector<EstimateReport> median_size;  // median of r_t - l_t + 1, per t
  std::uint64_t reps = 0;
  std::uint64_t censored = 0;

  const EstimateReport& at(std::size_t ti, std::size_t mi) const { return survival[ti * levels.size() + mi]; }
};
TightnessTable exp_tightness_sweep(const Kernel& kernel, std::span<const double> times,
                                   std::span<const std::int64_t> levels, std::uint64_t reps, const Streams& streams,
                                   const VoterOptions& options = {});

struct SchedulePoint {
  int k = 0;
  std::int64_t M = 0;
  double t = 0.0;
};
/// M_k = 2^k and t_k = C / sum_{x >= 2^(k+2)} p(x).
SchedulePoint schedule_point(const Kernel& kernel, double C, int k);

struct ScheduleRow {
  SchedulePoint point;
  EstimateReport interface;       // P(r_tk - l_tk >= M_k)
  EstimateReport big_jump;        // P(F_k,1)
  double big_jump_exact = 0.0;    // C e^(-2C)
  EstimateReport small_moment;    // E[Z'(t_k)^2]
  double small_moment_exact = 0.0;
  EstimateReport small_confined;  // P(sup |Z'| < M_k)
};
std::vector<ScheduleRow> exp_theorem2_schedule(const Kernel& kernel, double C, std::span<const int> k_list,
                                               std::uint64_t walk_reps, std::uint64_t voter_reps,
                                               const Streams& streams, const VoterOptions& options = {});

struct GreenReport {
  EstimateReport occupation;  // MC occupation time of l times the jump rate (visit scale)
  EstimateReport hit;         // P^x(tau_l < tau_exit)
  EstimateReport escape;      // P^l(tau_exit < return to l)
  EstimateReport ratio;       // hit / escape, interval from the two Wilson intervals
  std::optional<double> exact;
  bool agree = false;
};
GreenReport exp_greenfn(const Kernel& kernel, std::int64_t k, int r, std::int64_t x, std::int64_t l,
                        std::uint64_t reps, const Streams& streams, ExactSolveOptions options = {});

/// P(eta_t(x) = 1) for each x from forward voter runs sharing one trajectory
/// per replicate.
std::vector<EstimateReport> forward_marginals(const Kernel& kernel, double t, std::span<const std::int64_t> sites,
                                              std::uint64_t reps, const Streams& streams,
                                              const VoterOptions& options = {});

}  // namespace vmint
