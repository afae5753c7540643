#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace vmint {

/// Seed derivation for independent replicate streams.
///
/// Every replicate owns a stream keyed by (master seed, experiment key,
/// replicate index). The key is hashed with FNV-1a and the triple is mixed
/// through SplitMix64, so streams never depend on scheduling order.
std::uint64_t fnv1a64(std::string_view text);
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t stream_seed(std::uint64_t master, std::string_view key, std::uint64_t index);

/// Random stream used by every simulator. Wraps std::mt19937_64, whose output
/// sequence is fixed by the standard; the real-valued and bounded-integer
/// transforms are defined here so draws do not depend on the standard
/// library's distribution implementations.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform on (0, 1].
  double uniform_open0() { return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53; }
  double exponential(double rate);
  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);
  bool coin() { return (engine_() >> 63) != 0; }

 private:
  std::mt19937_64 engine_;
};

inline Rng replicate_rng(std::uint64_t master, std::string_view key, std::uint64_t index) {
  return Rng(stream_seed(master, key, index));
}

}  // namespace vmint
