#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "vpdheat/diagram.hpp"
#include "vpdheat/levy.hpp"
#include "vpdheat/spectral.hpp"

namespace vpdheat {

struct EstimatorResult {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;
  double reference = 0.0;
  double z_score = 0.0;
};

namespace detail {

inline constexpr std::size_t kSampleBlock = 8192;

// Counts samples i in [0, n) with hit(i) true. Sample i always uses stream
// (seed, i); per-block counts are summed in block order.
template <class Hit>
std::size_t count_hits(std::size_t n, Hit hit) {
  const std::size_t blocks = (n + kSampleBlock - 1) / kSampleBlock;
  std::vector<std::size_t> counts(blocks, 0);
  parallel_blocks(blocks, [&](std::size_t b) {
    const std::size_t end = std::min(n, (b + 1) * kSampleBlock);
    for (std::size_t i = b * kSampleBlock; i < end; ++i)
      if (hit(i)) ++counts[b];
  });
  std::size_t total = 0;
  for (auto c : counts) total += c;
  return total;
}

inline EstimatorResult proportion(std::size_t hits, std::size_t n, double reference) {
  EstimatorResult r;
  r.n_samples = n;
  r.estimate = n ? static_cast<double>(hits) / static_cast<double>(n) : 0.0;
  r.std_error = n > 1 ? std::sqrt(r.estimate * (1.0 - r.estimate) / static_cast<double>(n)) : 0.0;
  r.reference = reference;
  r.z_score = r.std_error > 0.0 ? (r.estimate - reference) / r.std_error : 0.0;
  return r;
}

}  // namespace detail

/// Fraction of walks S_t ending at 0, scored against `reference`.
inline EstimatorResult sample_return(const JumpMeasure& nu, double t, std::size_t n, std::uint64_t seed,
                                     double reference) {
  require(n >= 10000, "estimate_return: n must be at least 10^4");
  require(t >= 0.0, "estimate_return: t must be nonnegative");
  const JumpSampler sampler(nu);
  const std::size_t hits = detail::count_hits(n, [&](std::size_t i) {
    auto rng = stream_for(seed, i);
    return is_zero(sampler.endpoint(rng, t));
  });
  return detail::proportion(hits, n, reference);
}

/// Pairs walks (2j, 2j+1) and counts equal endpoints.
inline EstimatorResult sample_collision(const JumpMeasure& nu, double t, std::size_t n, std::uint64_t seed,
                                        double reference) {
  require(n >= 20000 && n % 2 == 0, "estimate_collision: n must be even and at least 2*10^4");
  require(t >= 0.0, "estimate_collision: t must be nonnegative");
  const JumpSampler sampler(nu);
  const std::size_t pairs = n / 2;
  const std::size_t hits = detail::count_hits(pairs, [&](std::size_t j) {
    auto a = stream_for(seed, 2 * j);
    auto b = stream_for(seed, 2 * j + 1);
    return sampler.endpoint(a, t) == sampler.endpoint(b, t);
  });
  return detail::proportion(hits, pairs, reference);
}

/// Empirical P(M(S_t) > R).
inline EstimatorResult sample_mass_tail(const GroundSpace& space, const JumpMeasure& nu, double t,
                                        double radius, std::size_t n, std::uint64_t seed, double reference) {
  require(n >= 10000, "estimate_mass_tail: n must be at least 10^4");
  require(t >= 0.0 && radius > 0.0, "estimate_mass_tail: need t >= 0 and R > 0");
  require(space.rank() == nu.rank, "estimate_mass_tail: rank mismatch");
  const JumpSampler sampler(nu);
  const std::size_t hits = detail::count_hits(n, [&](std::size_t i) {
    auto rng = stream_for(seed, i);
    return mass(space, sampler.endpoint(rng, t)) > radius;
  });
  return detail::proportion(hits, n, reference);
}

/// sample_return against p_t(0) from the series kernel.
inline EstimatorResult estimate_return(const JumpMeasure& nu, double t, std::size_t n,
                                       std::uint64_t seed, double series_tol = 1e-12) {
  require(n >= 10000, "estimate_return: n must be at least 10^4");
  return sample_return(nu, t, n, seed, heat_series(nu, t, series_tol).at(zero_point(nu.rank)));
}

/// sample_collision against sum p_t(h)^2 from the series kernel.
inline EstimatorResult estimate_collision(const JumpMeasure& nu, double t, std::size_t n,
                                          std::uint64_t seed, double series_tol = 1e-12) {
  require(n >= 20000 && n % 2 == 0, "estimate_collision: n must be even and at least 2*10^4");
  return sample_collision(nu, t, n, seed, sum_of_squares(heat_series(nu, t, series_tol).masses));
}

/// sample_mass_tail against the same tail summed over the series kernel.
inline EstimatorResult estimate_mass_tail(const GroundSpace& space, const JumpMeasure& nu, double t,
                                          double radius, std::size_t n, std::uint64_t seed,
                                          double series_tol = 1e-12) {
  require(n >= 10000, "estimate_mass_tail: n must be at least 10^4");
  require(t >= 0.0 && radius > 0.0, "estimate_mass_tail: need t >= 0 and R > 0");
  require(space.rank() == nu.rank, "estimate_mass_tail: rank mismatch");
  double ref = 0.0;
  for (const auto& [h, p] : heat_series(nu, t, series_tol).masses)
    if (mass(space, h) > radius) ref += p;
  return sample_mass_tail(space, nu, t, radius, n, seed, ref);
}

/// Endpoint histogram of n walks, merged in block order.
inline std::map<Point, std::size_t> endpoint_histogram(const JumpMeasure& nu, double t, std::size_t n,
                                                       std::uint64_t seed) {
  require(t >= 0.0, "endpoint_histogram: t must be nonnegative");
  const JumpSampler sampler(nu);
  const std::size_t blocks = (n + detail::kSampleBlock - 1) / detail::kSampleBlock;
  std::vector<std::map<Point, std::size_t>> parts(blocks);
  parallel_blocks(blocks, [&](std::size_t b) {
    const std::size_t end = std::min(n, (b + 1) * detail::kSampleBlock);
    for (std::size_t i = b * detail::kSampleBlock; i < end; ++i) {
      auto rng = stream_for(seed, i);
      ++parts[b][sampler.endpoint(rng, t)];
    }
  });
  std::map<Point, std::size_t> out;
  for (const auto& part : parts)
    for (const auto& [h, c] : part) out[h] += c;
  return out;
}

/// Total variation between an empirical histogram and a kernel.
inline double total_variation(const std::map<Point, std::size_t>& hist, std::size_t n,
                              const HeatKernel& k) {
  double tv = 0.0;
  for (const auto& [h, p] : k.masses) {
    auto it = hist.find(h);
    const double e = it == hist.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(n);
    tv += std::abs(e - p);
  }
  for (const auto& [h, c] : hist)
    if (!k.masses.count(h)) tv += static_cast<double>(c) / static_cast<double>(n);
  return 0.5 * (tv + k.deficit);
}

}  // namespace vpdheat
