#include "vmint/walks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace vmint {

void StoppingSpec::validate() const {
  if (targets.empty() && !horizon) throw WalkSpecError("stopping spec needs a target or a finite horizon");
  if (horizon && !(*horizon >= 0.0)) throw WalkSpecError("horizon must be nonnegative");
  for (const auto& t : targets)
    if (t.kind == Target::Kind::outside && !(t.a < t.b))
      throw WalkSpecError("interval_complement requires lo < hi");
}

namespace {

int first_target(const std::vector<Target>& targets, std::int64_t x) {
  for (std::size_t i = 0; i < targets.size(); ++i)
    if (targets[i].contains(x)) return static_cast<int>(i);
  return kHorizonExpired;
}

template <bool Timed>
WalkOutcome simulate(const Kernel& kernel, std::int64_t start, const StoppingSpec& spec, Rng& rng,
                     bool track, double rate) {
  spec.validate();
  WalkOutcome out;
  out.final_position = start;
  const double horizon = spec.horizon.value_or(std::numeric_limits<double>::infinity());
  if (!spec.strict_return) {
    if (int hit = first_target(spec.targets, start); hit != kHorizonExpired) {
      out.first_hit = hit;
      return out;
    }
  }
  std::int64_t pos = start;
  double clock = 0.0;
  for (;;) {
    const double hold = Timed ? rng.exponential(rate) : 1.0;
    if (clock + hold > horizon) {
      if (track && horizon > clock) out.occupation[pos] += horizon - clock;
      out.hit_time = horizon;
      out.final_position = pos;
      return out;
    }
    if (track) out.occupation[pos] += hold;
    clock += hold;
    pos += kernel.sample(rng);
    if (int hit = first_target(spec.targets, pos); hit != kHorizonExpired) {
      out.first_hit = hit;
      out.hit_time = clock;
      out.final_position = pos;
      return out;
    }
  }
}

}  // namespace

WalkOutcome run_walk(const Kernel& kernel, std::int64_t start, const StoppingSpec& spec, Rng& rng,
                     bool track_occupation, double rate) {
  return simulate<true>(kernel, start, spec, rng, track_occupation, rate);
}

WalkOutcome run_chain(const Kernel& kernel, std::int64_t start, const StoppingSpec& spec, Rng& rng,
                      bool track_occupation) {
  return simulate<false>(kernel, start, spec, rng, track_occupation, 1.0);
}

WalkOutcome run_difference_walk(const Kernel& kernel, std::int64_t start_gap, const StoppingSpec& spec, Rng& rng) {
  return DifferenceWalk(kernel).run(start_gap, spec, rng);
}

EstimateReport hit_before(const Kernel& kernel, std::int64_t start, const Target& target_a,
                          const Target& target_b, std::uint64_t reps, const Streams& streams,
                          bool strict_return) {
  StoppingSpec spec{{target_a, target_b}, std::nullopt, strict_return};
  spec.validate();
  if (!strict_return && (target_a.contains(start) || target_b.contains(start)))
    throw WalkSpecError("start lies in a target; use strict_return");
  auto hits = run_replicates<char>(streams, reps, [&](std::uint64_t, Rng& rng) {
    return static_cast<char>(run_chain(kernel, start, spec, rng).first_hit == 0);
  });
  std::uint64_t successes = 0;
  for (char h : hits) successes += static_cast<std::uint64_t>(h);
  EstimateReport r = proportion_report(successes, reps);
  r.experiment = "hit_before";
  r.seed = streams.master;
  r.with_param("start", static_cast<double>(start));
  return r;
}

// ---------------------------------------------------------------------------

ExteriorPartition two_sided_partition(std::int64_t lo, std::int64_t hi) {
  return [lo, hi](std::int64_t x) { return x <= lo ? 0 : (x >= hi ? 1 : -1); };
}

template <typename Scalar>
ExactSolve<Scalar>::ExactSolve(const Kernel& kernel, std::int64_t lo, std::int64_t hi,
                               ExteriorPartition partition, int classes, ExactSolveOptions options)
    : kernel_(kernel), lo_(lo), hi_(hi), classes_(classes), options_(options) {
  if (!(hi - lo >= 2)) throw ExactSolveError("interval (lo, hi) has no interior sites");
  const Eigen::Index n = unknowns();
  if (static_cast<std::size_t>(n) > options.max_unknowns)
    throw ExactSolveError("exact solve needs " + std::to_string(n) + " unknowns; ceiling is " +
                          std::to_string(options.max_unknowns));
  if (std::abs(kernel.total_mass() - 1.0) > 1e-12) throw ExactSolveError("exact solve needs a probability kernel");

  Matrix system = Matrix::Identity(n, n);
  Matrix exits = Matrix::Zero(n, classes);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::int64_t x = lo + 1 + i;
    for (std::size_t s = 0; s < kernel.sites().size(); ++s) {
      const std::int64_t y = x + kernel.sites()[s];
      const auto p = static_cast<Scalar>(kernel.masses()[s]);
      if (y > lo && y < hi) {
        system(i, y - lo - 1) -= p;
      } else {
        const int c = partition(y);
        if (c < 0 || c >= classes) throw ExactSolveError("partition left exterior site " + std::to_string(y) + " unclassified");
        exits(i, c) += p;
      }
    }
  }
  Eigen::PartialPivLU<Matrix> lu(system);
  green_ = lu.inverse();
  const Scalar residual = (system * green_ - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
  if (!(residual <= static_cast<Scalar>(options.residual_tolerance)))
    throw ExactSolveError("exact solve residual too large");
  absorption_ = green_ * exits;
}

template <typename Scalar>
Eigen::Index ExactSolve<Scalar>::index(std::int64_t x) const {
  if (!(x > lo_ && x < hi_)) throw ExactSolveError("site " + std::to_string(x) + " is not interior");
  return static_cast<Eigen::Index>(x - lo_ - 1);
}

template <typename Scalar>
typename ExactSolve<Scalar>::Vector ExactSolve<Scalar>::hit_vector(std::int64_t l) const {
  const Eigen::Index n = unknowns();
  const Eigen::Index skip = index(l);
  // Unknowns: interior sites other than l. u(y) = P^y(tau_l < tau_exit).
  Matrix system = Matrix::Identity(n - 1, n - 1);
  Vector rhs = Vector::Zero(n - 1);
  auto compact = [&](Eigen::Index i) { return i < skip ? i : i - 1; };
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i == skip) continue;
    const std::int64_t x = lo_ + 1 + i;
    for (std::size_t s = 0; s < kernel_.sites().size(); ++s) {
      const std::int64_t y = x + kernel_.sites()[s];
      const auto p = static_cast<Scalar>(kernel_.masses()[s]);
      if (y == l) {
        rhs(compact(i)) += p;
      } else if (y > lo_ && y < hi_) {
        system(compact(i), compact(y - lo_ - 1)) -= p;
      }
    }
  }
  Vector full = Vector::Zero(n);
  if (n > 1) {
    Vector u = system.partialPivLu().solve(rhs);
    for (Eigen::Index i = 0; i < n; ++i)
      if (i != skip) full(i) = u(compact(i));
  }
  full(skip) = 1;
  return full;
}

template <typename Scalar>
Scalar ExactSolve<Scalar>::hit_before_exit(std::int64_t x, std::int64_t l) const {
  return hit_vector(l)(index(x));
}

template <typename Scalar>
Scalar ExactSolve<Scalar>::escape_before_return(std::int64_t l) const {
  const Vector h = hit_vector(l);
  Scalar escape = 0;
  for (std::size_t s = 0; s < kernel_.sites().size(); ++s) {
    const std::int64_t y = l + kernel_.sites()[s];
    const auto p = static_cast<Scalar>(kernel_.masses()[s]);
    if (y <= lo_ || y >= hi_) escape += p;
    else if (y != l) escape += p * (1 - h(index(y)));
  }
  return escape;
}

template <typename Scalar>
void ExactSolve<Scalar>::write_csv(std::ostream& out) const {
  out << "kind,x,column,value\n";
  for (Eigen::Index i = 0; i < green_.rows(); ++i) {
    for (Eigen::Index j = 0; j < green_.cols(); ++j)
      out << "green," << lo_ + 1 + i << ',' << lo_ + 1 + j << ','
          << format_number(static_cast<double>(green_(i, j))) << '\n';
    for (Eigen::Index c = 0; c < absorption_.cols(); ++c)
      out << "absorption," << lo_ + 1 + i << ',' << c << ','
          << format_number(static_cast<double>(absorption_(i, c))) << '\n';
  }
}

template class ExactSolve<double>;
template class ExactSolve<long double>;

ExactSolve<double> exact_solve(const Kernel& kernel, std::int64_t lo, std::int64_t hi,
                               ExteriorPartition partition, int classes, ExactSolveOptions options) {
  return ExactSolve<double>(kernel, lo, hi, std::move(partition), classes, options);
}

// ---------------------------------------------------------------------------

PotentialKernelValue potential_kernel(const Kernel& kernel, std::int64_t x, std::uint64_t terms,
                                      std::int64_t window) {
  if (terms < 1) throw std::invalid_argument("potential_kernel needs at least one term");
  if (!kernel.is_symmetric()) throw std::invalid_argument("potential_kernel needs a symmetric kernel");
  const std::int64_t radius = kernel.radius();
  if (window <= 0) {
    const double sigma = std::sqrt(kernel.moment(2.0));
    window = std::abs(x) + radius + static_cast<std::int64_t>(std::ceil(10.0 * sigma * std::sqrt(static_cast<double>(terms)))) + 8;
  }
  if (std::abs(x) > window) throw WindowOverflow("site outside the convolution window", std::abs(x) + 1);

  const auto width = static_cast<std::size_t>(2 * window + 1);
  std::vector<double> cur(width, 0.0), next(width, 0.0);
  const auto at = [window](std::int64_t y) { return static_cast<std::size_t>(y + window); };
  cur[at(0)] = 1.0;
  std::int64_t reach = 0;

  PotentialKernelValue out;
  long double sum = 0;
  for (std::uint64_t i = 0; i < terms; ++i) {
    const double increment = cur[at(0)] - cur[at(x)];
    sum += increment;
    out.last_increment = increment;
    out.terms = i + 1;
    if (i + 1 == terms) break;

    const std::int64_t new_reach = std::min(window, reach + radius);
    std::fill(next.begin() + static_cast<std::ptrdiff_t>(at(-new_reach)),
              next.begin() + static_cast<std::ptrdiff_t>(at(new_reach)) + 1, 0.0);
    double lost = 0.0;
    for (std::int64_t y = -reach; y <= reach; ++y) {
      const double m = cur[at(y)];
      if (m == 0.0) continue;
      for (std::size_t s = 0; s < kernel.sites().size(); ++s) {
        const std::int64_t z = y + kernel.sites()[s];
        const double w = m * kernel.masses()[s];
        if (z < -window || z > window) lost += w;
        else next[at(z)] += w;
      }
    }
    if (lost > 1e-12) {
      const double sigma = std::sqrt(kernel.moment(2.0));
      const auto need = std::abs(x) + radius +
                        static_cast<std::int64_t>(std::ceil(10.0 * sigma * std::sqrt(static_cast<double>(terms))));
      throw WindowOverflow("potential kernel window overflow after " + std::to_string(i + 1) +
                               " terms; use a window of at least " + std::to_string(need),
                           need);
    }
    reach = new_reach;
    std::swap(cur, next);
  }
  out.value = static_cast<double>(sum);
  return out;
}

ReturnTail return_tail(const Kernel& kernel, std::int64_t n, std::uint64_t reps, const Streams& streams) {
  if (n < 1) throw std::invalid_argument("return_tail needs n >= 1");
  const auto steps = static_cast<std::uint64_t>(n * n);
  const double time = static_cast<double>(n) * static_cast<double>(n);
  struct Flags {
    char timed = 0;
    char chain = 0;
  };
  auto flags = run_replicates<Flags>(streams, reps, [&](std::uint64_t, Rng& rng) {
    std::int64_t pos = 0;
    double clock = 0.0;
    std::uint64_t jumps = 0;
    Flags f;
    for (;;) {
      clock += rng.exponential(1.0);
      pos += kernel.sample(rng);
      ++jumps;
      if (pos == 0) {
        f.timed = static_cast<char>(clock >= time);
        f.chain = static_cast<char>(jumps > steps);
        return f;
      }
      if (jumps > steps && clock >= time) {
        f.timed = f.chain = 1;
        return f;
      }
    }
  });
  std::uint64_t timed = 0, chain = 0;
  for (const auto& f : flags) {
    timed += static_cast<std::uint64_t>(f.timed);
    chain += static_cast<std::uint64_t>(f.chain);
  }
  ReturnTail out{proportion_report(timed, reps), proportion_report(chain, reps)};
  for (auto* r : {&out.continuous, &out.embedded}) {
    r->experiment = "return_tail";
    r->seed = streams.master;
    r->with_param("n", static_cast<double>(n));
    r->with_extra("n_times_p", static_cast<double>(n) * r->point);
  }
  return out;
}

EstimateReport survival_from(const Kernel& kernel, std::int64_t x, double t, std::uint64_t reps,
                             const Streams& streams) {
  if (x == 0) throw std::invalid_argument("survival_from needs x != 0");
  StoppingSpec spec{{Target::point(0)}, t, false};
  auto alive = run_replicates<char>(streams, reps, [&](std::uint64_t, Rng& rng) {
    return static_cast<char>(run_walk(kernel, x, spec, rng).expired());
  });
  std::uint64_t s = 0;
  for (char a : alive) s += static_cast<std::uint64_t>(a);
  EstimateReport r = proportion_report(s, reps);
  r.experiment = "survival_from";
  r.seed = streams.master;
  r.with_param("x", static_cast<double>(x)).with_param("t", t);
  const double scale = std::min(std::abs(static_cast<double>(x)) / std::sqrt(t), 1.0);
  r.with_extra("normalized_ratio", r.point / scale);
  return r;
}

}  // namespace vmint
