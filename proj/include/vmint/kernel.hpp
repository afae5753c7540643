#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vmint/rng.hpp"

namespace vmint {

class KernelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class KernelFamily { nearest_neighbor, uniform_range, geometric, power_law, table, derived };

struct KernelSpec {
  KernelFamily family = KernelFamily::nearest_neighbor;
  std::int64_t range = 1;       // uniform_range(R)
  double q = 0.5;               // geometric(q)
  double alpha = 1.5;           // power_law(alpha, cutoff)
  std::int64_t cutoff = 1000;   // power_law(alpha, cutoff)
  std::string path;             // table(path)
  bool center = false;          // symmetrize a non-centered table kernel

  std::string to_string() const;
};

/// Parses "nearest_neighbor", "uniform_range(2)", "geometric(0.4)",
/// "power_law(1.5, 1000)", "table(path/to/file)".
KernelSpec parse_kernel_spec(std::string_view text);

enum class TailSide { two_sided, positive, negative };

/// Inverse-transform sampler over a finite weighted list, with a guide table
/// so the search starts next to the answer.
class InverseCdf {
 public:
  InverseCdf() = default;
  InverseCdf(std::span<const std::int64_t> values, std::span<const double> weights);

  bool empty() const { return values_.empty(); }
  std::int64_t sample(Rng& rng) const;

 private:
  std::vector<std::int64_t> values_;
  std::vector<double> cdf_;
  std::vector<std::uint32_t> guide_;
};

/// A step distribution on the integers with finite support.
///
/// Masses may sum to less than one when the kernel is one half of a split;
/// `sample` then draws from the conditional law given a jump. Kernels are
/// immutable after construction and safe to share between threads.
class Kernel {
 public:
  Kernel() = default;

  /// Builds from raw (site, mass) pairs without normalizing. Duplicate sites
  /// are merged; zero masses are dropped. Negative masses throw.
  static Kernel from_masses(std::vector<std::pair<std::int64_t, double>> entries,
                            std::string tag, KernelFamily family = KernelFamily::derived);

  std::span<const std::int64_t> sites() const { return sites_; }
  std::span<const double> masses() const { return masses_; }
  const std::string& tag() const { return tag_; }
  KernelFamily family() const { return family_; }

  double mass(std::int64_t x) const;
  double total_mass() const { return total_; }
  bool empty() const { return sites_.empty(); }
  /// Largest |x| in the support.
  std::int64_t radius() const { return radius_; }
  double mean() const;
  bool is_symmetric() const;

  std::int64_t sample(Rng& rng) const;

  double moment(double order) const;
  double tail_mass(std::int64_t m, TailSide side = TailSide::two_sided) const;
  /// Sum over j >= d of the one-sided tail T(j) on the given side.
  double double_tail(std::int64_t d, TailSide side) const;

  /// Sum_{x>0} x p(x) and Sum_{x<0} |x| p(x).
  double positive_first_moment() const { return pos_first_; }
  double negative_first_moment() const { return neg_first_; }
  /// d >= 1 with probability proportional to d p(d) (or d p(-d)).
  std::int64_t sample_size_biased(TailSide side, Rng& rng) const;

 private:
  void finalize();

  std::vector<std::int64_t> sites_;
  std::vector<double> masses_;
  std::string tag_;
  KernelFamily family_ = KernelFamily::derived;
  double total_ = 0.0;
  std::int64_t radius_ = 0;
  InverseCdf sampler_;
  // pos_tail_[m] = Sum_{x>=m} p(x), neg_tail_[m] = Sum_{x<=-m} p(x), m in [0, radius+1].
  std::vector<double> pos_tail_, neg_tail_;
  std::vector<double> pos_double_tail_, neg_double_tail_;
  double pos_first_ = 0.0, neg_first_ = 0.0;
  InverseCdf pos_biased_, neg_biased_;
};

/// Normalized, validated kernel for a family. Throws KernelError on invalid
/// parameters, a non-normalizable table, or a reducible support.
Kernel build_kernel(const KernelSpec& spec);

/// q(x) = (p(x) + p(-x)) / 2.
Kernel symmetrize(const Kernel& kernel);

struct SplitKernel {
  Kernel near;  // |x| <= threshold
  Kernel far;   // |x| >  threshold
};
SplitKernel split_at(const Kernel& kernel, std::int64_t threshold);

bool is_irreducible(const Kernel& kernel);

/// "site mass" text format; '#' starts a comment.
std::vector<std::pair<std::int64_t, double>> read_kernel_table(std::istream& in);
std::vector<std::pair<std::int64_t, double>> load_kernel_table(const std::string& path);
void write_kernel_table(const Kernel& kernel, std::ostream& out);

}  // namespace vmint
