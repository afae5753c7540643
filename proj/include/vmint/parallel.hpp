#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "vmint/rng.hpp"

namespace vmint {

/// Where replicate randomness comes from: a master seed, a key naming the
/// estimator and its parameters, and the worker count used to fan out.
struct Streams {
  std::uint64_t master = 0;
  std::string key;
  unsigned workers = 1;

  Rng replicate(std::uint64_t index) const { return replicate_rng(master, key, index); }
  Streams sub(std::string_view suffix) const { return {master, key + "/" + std::string(suffix), workers}; }
};

class ReplicateError : public std::runtime_error {
 public:
  ReplicateError(const std::string& key, std::uint64_t master, std::uint64_t index, const std::string& what)
      : std::runtime_error("replicate failed (key=" + key + ", seed=" + std::to_string(master) +
                           ", replicate=" + std::to_string(index) + "): " + what),
        index_(index) {}
  std::uint64_t index() const { return index_; }

 private:
  std::uint64_t index_;
};

/// Runs fn(index, rng) for every replicate and returns results in index
/// order. Workers pull fixed-size chunks from a shared counter; the output
/// never depends on how chunks were scheduled. The lowest failing index is
/// rethrown as ReplicateError.
template <class T, class Fn>
std::vector<T> run_replicates(const Streams& streams, std::uint64_t count, Fn&& fn) {
  std::vector<T> out(count);
  if (count == 0) return out;
  const unsigned workers = std::max(1u, std::min<unsigned>(streams.workers, static_cast<unsigned>(std::min<std::uint64_t>(count, 1024))));
  constexpr std::uint64_t chunk = 64;
  std::atomic<std::uint64_t> next{0};
  std::mutex error_mutex;
  std::uint64_t error_index = count;
  std::string error_what;

  auto body = [&] {
    for (;;) {
      const std::uint64_t begin = next.fetch_add(chunk);
      if (begin >= count) return;
      const std::uint64_t end = std::min(count, begin + chunk);
      for (std::uint64_t i = begin; i < end; ++i) {
        try {
          Rng rng = streams.replicate(i);
          out[i] = fn(i, rng);
        } catch (const std::exception& e) {
          std::lock_guard lock(error_mutex);
          if (i < error_index) {
            error_index = i;
            error_what = e.what();
          }
          return;
        }
      }
    }
  };

  if (workers == 1) {
    body();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body);
  }
  if (error_index < count) throw ReplicateError(streams.key, streams.master, error_index, error_what);
  return out;
}

}  // namespace vmint
