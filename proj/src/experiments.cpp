#include "vmint/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace vmint {

namespace {

std::uint64_t count_true(const std::vector<char>& flags) {
  std::uint64_t n = 0;
  for (char f : flags) n += static_cast<std::uint64_t>(f != 0);
  return n;
}

EstimateReport tagged(EstimateReport r, const char* experiment, const Streams& streams) {
  r.experiment = experiment;
  r.seed = streams.master;
  return r;
}

std::int64_t dyadic(std::int64_t k, int r) {
  if (r < 0 || r > 40) throw PreconditionError("r must lie in [0, 40]");
  return k << r;
}

}  // namespace

EstimateReport exp_Vk(const Kernel& kernel, std::int64_t k, double t, std::uint64_t reps, const Streams& streams) {
  if (k < 1) throw PreconditionError("exp_Vk needs k >= 1");
  if (!(t > 0.0)) throw PreconditionError("exp_Vk needs t > 0");
  const DifferenceWalk walk(kernel);
  const StoppingSpec spec{{Target::point(0)}, t, false};
  auto flags = run_replicates<char>(streams, reps, [&](std::uint64_t, Rng& rng) {
    const WalkOutcome o = walk.run(k, spec, rng);
    return static_cast<char>(o.expired() && o.final_position < 0);
  });
  EstimateReport r = tagged(proportion_report(count_true(flags), reps), "exp_Vk", streams);
  r.with_param("k", static_cast<double>(k)).with_param("t", t);
  r.with_extra("normalized_ratio", r.point / (static_cast<double>(k) / std::sqrt(t)));
  return r;
}

EstimateReport exp_Akr(const Kernel& kernel, std::int64_t k, int r, std::uint64_t reps, const Streams& streams) {
  if (k < 1) throw PreconditionError("exp_Akr needs k >= 1");
  const std::int64_t inner = dyadic(k, r), outer = dyadic(k, r + 1);
  const DifferenceWalk walk(kernel);
  const StoppingSpec first{{Target::outside(0, inner)}, std::nullopt, false};
  const StoppingSpec second{{Target::at_most(0), Target::at_least(outer)}, std::nullopt, false};
  auto flags = run_replicates<char>(streams, reps, [&](std::uint64_t, Rng& rng) {
    const WalkOutcome exit = walk.run_chain(k, first, rng);
    if (exit.final_position <= 0 || exit.final_position >= outer) return char{0};
    return static_cast<char>(walk.run_chain(exit.final_position, second, rng).first_hit == 0);
  });
  EstimateReport rep = tagged(proportion_report(count_true(flags), reps), "exp_Akr", streams);
  rep.with_param("k", static_cast<double>(k)).with_param("r", static_cast<double>(r));
  rep.with_extra("scaled", std::ldexp(rep.point, r));
  return rep;
}

double exact_Akr(const Kernel& kernel, std::int64_t k, int r, ExactSolveOptions options) {
  const std::int64_t inner = dyadic(k, r), outer = dyadic(k, r + 1);
  const Kernel step = symmetrize(kernel);
  const int middle = static_cast<int>(outer - inner);
  // Stage one: class 0 is (-inf, 0], class 1 + (y - inner) is each y in
  // [inner, outer), the last class is [outer, inf).
  auto stage_one_classes = [inner, outer, middle](std::int64_t y) {
    if (y <= 0) return 0;
    if (y >= outer) return middle + 1;
    if (y >= inner) return 1 + static_cast<int>(y - inner);
    return -1;
  };
  const auto stage_one = exact_solve(step, 0, inner, stage_one_classes, middle + 2, options);
  const auto stage_two = exact_solve(step, 0, outer, two_sided_partition(0, outer), 2, options);
  double total = 0.0;
  for (std::int64_t y = inner; y < outer; ++y) {
    const double reach = stage_one.absorption(k, 1 + static_cast<int>(y - inner));
    const double down = y < outer && y > 0 ? stage_two.absorption(y, 0) : 0.0;
    total += reach * down;
  }
  return total;
}

OvershootReport exp_overshoot(const Kernel& kernel, std::int64_t k, int r, std::uint64_t reps, const Streams& streams,
                              std::uint64_t step_cap) {
  if (k < 1) throw PreconditionError("exp_overshoot needs k >= 1");
  const std::int64_t inner = dyadic(k, r);
  const Kernel step = symmetrize(kernel);
  struct Rep {
    double overshoot = 0.0;
    char far = 0;
    char censored = 0;
  };
  auto reps_out = run_replicates<Rep>(streams, reps, [&](std::uint64_t, Rng& rng) {
    Rep rep;
    std::int64_t z = k;
    bool exited = false;
    for (std::uint64_t n = 0;; ++n) {
      if (n >= step_cap) {
        rep.censored = 1;
        return rep;
      }
      z += step.sample(rng);
      if (!exited && (z <= 0 || z >= inner)) {
        exited = true;
        rep.far = static_cast<char>(2 * z > 3 * inner);
      }
      if (z <= 0) {
        rep.overshoot = static_cast<double>(-z);
        return rep;
      }
    }
  });
  std::vector<double> overshoots;
  std::uint64_t far = 0, censored = 0;
  for (const auto& rep : reps_out) {
    if (rep.censored) {
      ++censored;
      continue;
    }
    overshoots.push_back(rep.overshoot);
    far += static_cast<std::uint64_t>(rep.far);
  }
  OvershootReport out;
  out.mean_overshoot = tagged(mean_report(overshoots, stream_seed(streams.master, streams.key + "/bootstrap", 0), censored),
                              "exp_overshoot", streams);
  out.mean_overshoot.with_param("k", static_cast<double>(k)).with_param("r", static_cast<double>(r));
  out.mean_overshoot.with_param("quantity", std::string("mean_overshoot"));
  out.mean_overshoot.with_extra("per_k", out.mean_overshoot.point / static_cast<double>(k));
  out.exit_far = tagged(proportion_report(far, overshoots.size(), censored), "exp_overshoot", streams);
  out.exit_far.with_param("k", static_cast<double>(k)).with_param("r", static_cast<double>(r));
  out.exit_far.with_param("quantity", std::string("exit_beyond_3k2r_over_2"));
  out.exit_far.with_extra("scaled", std::ldexp(out.exit_far.point, r));
  return out;
}

UkFarReport exp_Uk_far(const Kernel& kernel, std::int64_t k, double m, double t, std::uint64_t reps,
                       const Streams& streams) {
  if (k > -1) throw PreconditionError("exp_Uk_far needs k <= -1");
  if (!(m > 0.0) || !(t > 0.0)) throw PreconditionError("exp_Uk_far needs m > 0 and t > 0");
  const double level = m * std::sqrt(t);
  struct Rep {
    char apart = 0;
    char joint = 0;
  };
  auto pair = run_replicates<Rep>(streams.sub("pair"), reps, [&](std::uint64_t, Rng& rng) {
    std::int64_t a = 0, b = k;
    double clock = 0.0;
    for (;;) {
      clock += rng.exponential(2.0);
      if (clock > t) break;
      (rng.coin() ? a : b) += kernel.sample(rng);
      if (a == b) return Rep{};
    }
    Rep rep;
    rep.apart = 1;
    rep.joint = static_cast<char>(static_cast<double>(a) >= level || static_cast<double>(b) >= level);
    return rep;
  });
  const StoppingSpec free_walk{{}, 2.0 * t, false};
  auto tail = run_replicates<char>(streams.sub("tail"), reps, [&](std::uint64_t, Rng& rng) {
    return static_cast<char>(std::abs(static_cast<double>(run_walk(kernel, 0, free_walk, rng).final_position)) >= level);
  });
  std::uint64_t apart = 0, joint = 0;
  for (const auto& rep : pair) {
    apart += static_cast<std::uint64_t>(rep.apart);
    joint += static_cast<std::uint64_t>(rep.joint);
  }
  UkFarReport out;
  out.joint = tagged(proportion_report(joint, reps), "exp_Uk_far", streams);
  out.no_collision = tagged(proportion_report(apart, reps), "exp_Uk_far", streams);
  out.tail = tagged(proportion_report(count_true(tail), reps), "exp_Uk_far", streams);
  const double denom = out.no_collision.point * out.tail.point;
  out.ratio = out.joint.point == 0.0 ? 0.0 : (denom > 0.0 ? out.joint.point / denom : std::numeric_limits<double>::infinity());
  const char* names[] = {"joint", "no_collision", "tail"};
  EstimateReport* parts[] = {&out.joint, &out.no_collision, &out.tail};
  for (int i = 0; i < 3; ++i) {
    parts[i]->with_param("k", static_cast<double>(k)).with_param("m", m).with_param("t", t);
    parts[i]->with_param("quantity", std::string(names[i]));
    parts[i]->with_extra("ratio", out.ratio);
  }
  return out;
}

ExcursionReport exp_excursion(const Kernel& kernel, std::int64_t k, double t, std::uint64_t reps,
                              const Streams& streams) {
  if (k == 0) throw PreconditionError("exp_excursion needs k != 0");
  if (!(t > 2.0 * static_cast<double>(k) * static_cast<double>(k)))
    throw PreconditionError("exp_excursion needs t > 2k^2");
  const Kernel step = symmetrize(kernel);
  const double rate = DifferenceWalk::rate();
  const double need = 1.5 * t;

  // E_1: some excursion from 0 leaves before t/2 and stays away for 3t/2.
  auto e1 = run_replicates<char>(streams.sub("e1"), reps, [&](std::uint64_t, Rng& rng) {
    double clock = 0.0;
    for (;;) {
      clock += rng.exponential(rate);
      const double departure = clock;
      if (departure >= t / 2.0) return char{0};
      std::int64_t z = step.sample(rng);
      while (z != 0) {
        clock += rng.exponential(rate);
        if (clock - departure >= need) return char{1};
        z += step.sample(rng);
      }
    }
  });

  // Excursions from 0 with no return before 3t/2; did |Z| reach |k| by k^2?
  const double deadline = static_cast<double>(k) * static_cast<double>(k);
  const std::int64_t height = k < 0 ? -k : k;
  struct Rep {
    char long_enough = 0;
    char reached = 0;
  };
  auto cond = run_replicates<Rep>(streams.sub("conditional"), reps, [&](std::uint64_t, Rng& rng) {
    Rep rep;
    double clock = rng.exponential(rate);
    std::int64_t z = step.sample(rng);
    bool reached = clock < deadline && (z >= height || z <= -height);
    while (z != 0) {
      clock += rng.exponential(rate);
      if (clock >= need) {
        rep.long_enough = 1;
        rep.reached = static_cast<char>(reached);
        return rep;
      }
      z += step.sample(rng);
      if (clock < deadline && (z >= height || z <= -height)) reached = true;
    }
    return rep;
  });
  std::uint64_t longs = 0, reached = 0;
  for (const auto& rep : cond) {
    longs += static_cast<std::uint64_t>(rep.long_enough);
    reached += static_cast<std::uint64_t>(rep.reached);
  }
  ExcursionReport out;
  out.long_excursion = tagged(proportion_report(count_true(e1), reps), "exp_excursion", streams);
  out.long_excursion.with_param("k", static_cast<double>(k)).with_param("t", t);
  out.long_excursion.with_param("quantity", std::string("E1"));
  out.reach_given_long = tagged(proportion_report(reached, longs), "exp_excursion", streams);
  out.reach_given_long.with_param("k", static_cast<double>(k)).with_param("t", t);
  out.reach_given_long.with_param("quantity", std::string("reach_given_long"));
  out.reach_given_long.with_extra("long_excursions", static_cast<double>(longs));
  return out;
}

TightnessTable exp_tightness_sweep(const Kernel& kernel, std::span<const double> times,
                                   std::span<const std::int64_t> levels, std::uint64_t reps, const Streams& streams,
                                   const VoterOptions& options) {
  if (times.empty() || levels.empty()) throw PreconditionError("tightness sweep needs nonempty t and M lists");
  if (std::abs(kernel.mean()) > 1e-12) throw PreconditionError("tightness sweep needs a mean-zero kernel");
  TightnessTable table;
  table.times.assign(times.begin(), times.end());
  std::sort(table.times.begin(), table.times.end());
  table.levels.assign(levels.begin(), levels.end());
  table.reps = reps;

  const VoterDynamics dynamics(kernel);
  VoterOptions opts = options;
  opts.track_inversions = false;
  opts.event_log = nullptr;
  struct Rep {
    std::vector<std::int64_t> spread;  // r_t - l_t per time
    bool censored = false;
  };
  auto runs = run_replicates<Rep>(streams, reps, [&](std::uint64_t, Rng& rng) {
    Rep rep;
    try {
      for (const auto& s : run_voter_observed(dynamics, init_heavyside(), table.times, rng, opts))
        rep.spread.push_back(s.right_one - s.left_zero);
    } catch (const HybridCapExceeded&) {
      rep.censored = true;
    }
    return rep;
  });
  for (const auto& rep : runs) table.censored += rep.censored;
  const std::uint64_t done = reps - table.censored;
  for (std::size_t ti = 0; ti < table.times.size(); ++ti) {
    std::vector<double> sizes;
    for (const auto& rep : runs)
      if (!rep.censored) sizes.push_back(static_cast<double>(std::max<std::int64_t>(0, rep.spread[ti] + 1)));
    for (std::int64_t M : table.levels) {
      std::uint64_t above = 0;
      for (const auto& rep : runs) above += !rep.censored && rep.spread[ti] > M;
      EstimateReport r = tagged(proportion_report(above, done, table.censored), "exp_tightness_sweep", streams);
      r.with_param("t", table.times[ti]).with_param("M", static_cast<double>(M));
      table.survival.push_back(std::move(r));
    }
    EstimateReport med = tagged(median_report(sizes, table.censored), "exp_tightness_sweep", streams);
    med.with_param("t", table.times[ti]).with_param("quantity", std::string("median_size"));
    table.median_size.push_back(std::move(med));
  }
  return table;
}

SchedulePoint schedule_point(const Kernel& kernel, double C, int k) {
  if (k < 1 || k > 40) throw PreconditionError("schedule index k must lie in [1, 40]");
  const std::int64_t M = std::int64_t{1} << k;
  const double tail = kernel.tail_mass(4 * M, TailSide::positive);
  if (!(tail > 0.0))
    throw PreconditionError("kernel cutoff too small for the schedule: no mass at or beyond " + std::to_string(4 * M));
  return {k, M, C / tail};
}

std::vector<ScheduleRow> exp_theorem2_schedule(const Kernel& kernel, double C, std::span<const int> k_list,
                                               std::uint64_t walk_reps, std::uint64_t voter_reps,
                                               const Streams& streams, const VoterOptions& options) {
  if (!(C > 0.0)) throw PreconditionError("schedule needs C > 0");
  if (k_list.empty()) throw PreconditionError("schedule needs a nonempty k list");
  if (!kernel.is_symmetric()) throw PreconditionError("schedule needs a symmetric kernel");
  std::vector<ScheduleRow> rows;
  for (int k : k_list) {
    ScheduleRow row;
    row.point = schedule_point(kernel, C, k);
    if (kernel.radius() < 4 * row.point.M)
      throw PreconditionError("kernel cutoff " + std::to_string(kernel.radius()) + " below 2^(k+2) = " +
                              std::to_string(4 * row.point.M));
    rows.push_back(row);
  }

  // Forward model: one trajectory per replicate observed at every t_k.
  // voter_reps == 0 leaves the interface estimates empty.
  std::vector<double> times;
  for (const auto& row : rows) times.push_back(row.point.t);
  std::vector<std::size_t> order(rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
  std::vector<double> sorted_times;
  for (std::size_t i : order) sorted_times.push_back(times[i]);
  const VoterDynamics dynamics(kernel);
  VoterOptions opts = options;
  opts.track_inversions = false;
  opts.event_log = nullptr;
  struct Rep {
    std::vector<std::int64_t> spread;
    bool censored = false;
  };
  std::vector<Rep> runs;
  if (voter_reps > 0) runs = run_replicates<Rep>(streams.sub("voter"), voter_reps, [&](std::uint64_t, Rng& rng) {
    Rep rep;
    try {
      for (const auto& s : run_voter_observed(dynamics, init_heavyside(), sorted_times, rng, opts))
        rep.spread.push_back(s.right_one - s.left_zero);
    } catch (const HybridCapExceeded&) {
      rep.censored = true;
    }
    return rep;
  });
  std::uint64_t censored = 0;
  for (const auto& rep : runs) censored += rep.censored;

  for (std::size_t pos = 0; voter_reps > 0 && pos < order.size(); ++pos) {
    ScheduleRow& row = rows[order[pos]];
    std::uint64_t wide = 0;
    for (const auto& rep : runs) wide += !rep.censored && rep.spread[pos] >= row.point.M;
    row.interface = tagged(proportion_report(wide, voter_reps - censored, censored), "exp_theorem2_schedule", streams);
  }

  for (auto& row : rows) {
    const std::int64_t big = 4 * row.point.M;
    const double t = row.point.t;
    const SplitKernel parts = split_at(kernel, big - 1);
    row.big_jump_exact = C * std::exp(-2.0 * C);
    row.small_moment_exact = t * parts.near.moment(2.0);
    struct Walk {
      char unique_right = 0;
      char confined = 0;
      double small_sq = 0.0;
    };
    // Rate-1 walk with the full kernel; jumps with |x| >= 4M_k are counted,
    // the rest accumulate into Z'.
    auto walks = run_replicates<Walk>(streams.sub("walk/k=" + std::to_string(row.point.k)), walk_reps,
                                      [&](std::uint64_t, Rng& rng) {
      Walk w;
      std::int64_t small = 0, sup = 0;
      int big_jumps = 0;
      bool right = false;
      double clock = 0.0;
      for (;;) {
        clock += rng.exponential(1.0);
        if (clock > t) break;
        const std::int64_t x = kernel.sample(rng);
        if (x >= big || x <= -big) {
          ++big_jumps;
          right = x > 0;
        } else {
          small += x;
          sup = std::max(sup, small < 0 ? -small : small);
        }
      }
      w.unique_right = static_cast<char>(big_jumps == 1 && right);
      w.confined = static_cast<char>(sup < row.point.M);
      w.small_sq = static_cast<double>(small) * static_cast<double>(small);
      return w;
    });
    std::uint64_t unique = 0, confined = 0;
    std::vector<double> squares;
    for (const auto& w : walks) {
      unique += static_cast<std::uint64_t>(w.unique_right);
      confined += static_cast<std::uint64_t>(w.confined);
      squares.push_back(w.small_sq);
    }
    row.big_jump = tagged(proportion_report(unique, walk_reps), "exp_theorem2_schedule", streams);
    row.big_jump.with_extra("exact", row.big_jump_exact);
    row.small_moment = tagged(
        mean_report(squares, stream_seed(streams.master, streams.key + "/bootstrap", static_cast<std::uint64_t>(row.point.k))),
        "exp_theorem2_schedule", streams);
    row.small_moment.with_extra("exact", row.small_moment_exact);
    row.small_confined = tagged(proportion_report(confined, walk_reps), "exp_theorem2_schedule", streams);
    const char* names[] = {"interface_at_least_M", "unique_right_big_jump", "small_second_moment", "small_confined"};
    EstimateReport* parts_out[] = {&row.interface, &row.big_jump, &row.small_moment, &row.small_confined};
    for (int i = 0; i < 4; ++i) {
      parts_out[i]->with_param("k", static_cast<double>(row.point.k))
          .with_param("M_k", static_cast<double>(row.point.M))
          .with_param("t_k", row.point.t)
          .with_param("quantity", std::string(names[i]));
    }
  }
  return rows;
}

GreenReport exp_greenfn(const Kernel& kernel, std::int64_t k, int r, std::int64_t x, std::int64_t l,
                        std::uint64_t reps, const Streams& streams, ExactSolveOptions options) {
  if (k < 1) throw PreconditionError("exp_greenfn needs k >= 1");
  const std::int64_t hi = dyadic(k, r);
  if (x <= 0 || x >= hi || l <= 0 || l >= hi)
    throw PreconditionError("exp_greenfn needs x and l inside (0, k 2^r)");
  const DifferenceWalk walk(kernel);
  const Kernel& step = walk.step_kernel();
  const double rate = DifferenceWalk::rate();

  auto times = run_replicates<double>(streams.sub("occupation"), reps, [&](std::uint64_t, Rng& rng) {
    std::int64_t z = x;
    double at_l = 0.0;
    while (z > 0 && z < hi) {
      const double hold = rng.exponential(rate);
      if (z == l) at_l += hold;
      z += step.sample(rng);
    }
    return at_l * rate;
  });

  const Target exit = Target::outside(0, hi);
  const StoppingSpec to_l{{Target::point(l), exit}, std::nullopt, false};
  auto hits = run_replicates<char>(streams.sub("hit"), reps, [&](std::uint64_t, Rng& rng) {
    if (x == l) return char{1};
    return static_cast<char>(walk.run_chain(x, to_l, rng).first_hit == 0);
  });
  const StoppingSpec from_l{{exit, Target::point(l)}, std::nullopt, true};
  auto escapes = run_replicates<char>(streams.sub("escape"), reps, [&](std::uint64_t, Rng& rng) {
    return static_cast<char>(walk.run_chain(l, from_l, rng).first_hit == 0);
  });

  GreenReport out;
  out.occupation = tagged(mean_report(times, stream_seed(streams.master, streams.key + "/bootstrap", 0)),
                          "exp_greenfn", streams);
  out.hit = tagged(proportion_report(count_true(hits), reps), "exp_greenfn", streams);
  out.escape = tagged(proportion_report(count_true(escapes), reps), "exp_greenfn", streams);
  out.ratio = tagged(EstimateReport{}, "exp_greenfn", streams);
  out.ratio.reps = reps;
  out.ratio.point = out.escape.point > 0.0 ? out.hit.point / out.escape.point : std::numeric_limits<double>::infinity();
  out.ratio.ci_low = out.escape.ci_high > 0.0 ? out.hit.ci_low / out.escape.ci_high : 0.0;
  out.ratio.ci_high = out.escape.ci_low > 0.0 ? out.hit.ci_high / out.escape.ci_low : std::numeric_limits<double>::infinity();
  try {
    const auto solve = exact_solve(step, 0, hi, two_sided_partition(0, hi), 2, options);
    out.exact = solve.green(x, l);
  } catch (const ExactSolveError&) {
    out.exact.reset();
  }
  out.agree = intervals_overlap(out.occupation, out.ratio);
  if (out.exact) out.agree = out.agree && contains(out.occupation, *out.exact) && contains(out.ratio, *out.exact);
  const char* names[] = {"occupation_visits", "hit_before_exit", "escape_before_return", "ratio"};
  EstimateReport* parts[] = {&out.occupation, &out.hit, &out.escape, &out.ratio};
  for (int i = 0; i < 4; ++i) {
    parts[i]->with_param("k", static_cast<double>(k)).with_param("r", static_cast<double>(r));
    parts[i]->with_param("x", static_cast<double>(x)).with_param("l", static_cast<double>(l));
    parts[i]->with_param("quantity", std::string(names[i]));
    if (out.exact) parts[i]->with_extra("exact_green", *out.exact);
  }
  return out;
}

std::vector<EstimateReport> forward_marginals(const Kernel& kernel, double t, std::span<const std::int64_t> sites,
                                              std::uint64_t reps, const Streams& streams,
                                              const VoterOptions& options) {
  const VoterDynamics dynamics(kernel);
  VoterOptions opts = options;
  opts.track_inversions = false;
  opts.event_log = nullptr;
  auto values = run_replicates<std::vector<char>>(streams, reps, [&](std::uint64_t, Rng& rng) {
    const InterfaceState s = run_voter(dynamics, init_heavyside(), t, rng, opts);
    std::vector<char> v;
    for (std::int64_t x : sites) v.push_back(static_cast<char>(s.value(x)));
    return v;
  });
  std::vector<EstimateReport> out;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    std::uint64_t ones = 0;
    for (const auto& v : values) ones += static_cast<std::uint64_t>(v[i]);
    EstimateReport r = tagged(proportion_report(ones, reps), "forward_marginal", streams);
    r.with_param("x", static_cast<double>(sites[i])).with_param("t", t);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace vmint
