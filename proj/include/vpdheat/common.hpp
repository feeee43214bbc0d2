#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace vpdheat {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Absolute tolerance used for metric-axiom checks.
inline constexpr double kMetricTol = 1e-12;

enum class ErrorKind { validation, cross_check, cost_guard, budget };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(const std::string& what) {
  throw Error(ErrorKind::validation, what);
}

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(what);
}

// splitmix64 finalizer; mixes (seed, index) into an independent stream seed.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// splitmix64 generator. One word of state, so a fresh stream per sample
/// costs nothing to seed.
class SplitMix64 {
public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() {
    const result_type out = mix64(state_);
    state_ += 0x9e3779b97f4a7c15ULL;
    return out;
  }

private:
  std::uint64_t state_;
};

using SampleRng = SplitMix64;

/// Per-sample random stream: depends only on (seed, index), never on
/// which worker draws it.
inline SampleRng stream_for(std::uint64_t seed, std::uint64_t index) {
  return SampleRng(mix64(mix64(seed) ^ mix64(index + 0x5851f42d4c957f2dULL)));
}

/// Worker count: VPDHEAT_THREADS if set, else hardware concurrency.
inline unsigned worker_count() {
  if (const char* env = std::getenv("VPDHEAT_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1U : hw;
}

/// Runs body(block) for block in [0, blocks). Blocks are fixed by the caller,
/// so results written per block do not depend on the worker count.
inline void parallel_blocks(std::size_t blocks, const std::function<void(std::size_t)>& body,
                            unsigned workers = worker_count()) {
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, blocks));
  if (workers <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) body(b);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t b = w; b < blocks; b += workers) body(b);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace vpdheat
