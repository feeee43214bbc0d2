#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "vpdheat/common.hpp"
#include "vpdheat/levy.hpp"

namespace vpdheat {

/// Sample mean with its standard error.
struct SampleMean {
  double mean = 0.0;
  double std_error = 0.0;
};

struct WalkInvariantRow {
  double t = 0.0;
  SampleMean ret, collision, energy;
};

struct WalkResolventRow {
  double s = 0.0;
  SampleMean value;
  double bias = 0.0;  // bound on the occupation time past the horizon
};

/// Path-side estimates of the heat invariants:
///   return     P(X_t = 0)
///   collision  P(X_t = X'_t) for independent copies
///   energy     q E[1{X_t = 0} - 1{X_t = J}], J ~ pi independent
///   resolvent  E integral_0^T e^{-st} 1{X_t = 0} dt
struct WalkInvariants {
  std::vector<WalkInvariantRow> rows;
  std::vector<WalkResolventRow> resolvent;
  std::size_t samples = 0;
};

namespace detail {

inline constexpr std::size_t kWalkBlock = 4096;

inline SampleMean mean_of(double sum, double sum_sq, std::size_t n) {
  SampleMean m;
  if (n == 0) return m;
  const double N = static_cast<double>(n);
  m.mean = sum / N;
  const double var = std::max(0.0, sum_sq / N - m.mean * m.mean);
  m.std_error = n > 1 ? std::sqrt(var / (N - 1.0)) : 0.0;
  return m;
}

}  // namespace detail

/// n pairs of walks per t and n paths for the occupation times. Streams are
/// keyed by (seed, grid index, sample index), so the result does not depend
/// on the worker count.
inline WalkInvariants simulate_invariants(const JumpMeasure& nu, const std::vector<double>& t_grid,
                                          const std::vector<double>& s_grid, std::size_t n,
                                          std::uint64_t seed, double tail_tol = 1e-6) {
  require(n >= 2, "simulate_invariants: need at least two samples");
  require(tail_tol > 0.0, "simulate_invariants: tail tolerance must be positive");
  for (double t : t_grid) require(t >= 0.0, "simulate_invariants: t must be nonnegative");
  for (double s : s_grid) require(s > 0.0, "simulate_invariants: s must be positive");
  const JumpSampler sampler(nu);
  const double q = nu.total_rate();
  const Point origin = zero_point(nu.rank);
  const std::size_t blocks = (n + detail::kWalkBlock - 1) / detail::kWalkBlock;
  WalkInvariants out;
  out.samples = n;

  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    const double t = t_grid[i];
    const std::uint64_t key = mix64(seed) ^ mix64(0x1000 + i);
    // Per block: returns, J-hits, collisions.
    std::vector<std::array<std::size_t, 3>> counts(blocks, {0, 0, 0});
    parallel_blocks(blocks, [&](std::size_t b) {
      const std::size_t end = std::min(n, (b + 1) * detail::kWalkBlock);
      auto& c = counts[b];
      for (std::size_t j = b * detail::kWalkBlock; j < end; ++j) {
        auto ra = stream_for(key, 2 * j), rb = stream_for(key, 2 * j + 1);
        const Point xa = sampler.endpoint(ra, t), xb = sampler.endpoint(rb, t);
        c[2] += xa == xb;
        for (auto [x, rng] : {std::pair<const Point*, SampleRng*>{&xa, &ra}, {&xb, &rb}}) {
          c[0] += *x == origin;
          if (q > 0.0) {
            const auto [k, sign] = sampler.draw(*rng);
            const Point& kappa = nu.pairs[k].kappa;
            bool hit = true;
            for (std::size_t d = 0; d < kappa.size() && hit; ++d) hit = (*x)[d] == sign * kappa[d];
            c[1] += hit;
          }
        }
      }
    });
    std::size_t ret = 0, jump = 0, col = 0;
    for (const auto& c : counts) {
      ret += c[0];
      jump += c[1];
      col += c[2];
    }
    WalkInvariantRow row;
    row.t = t;
    const auto r = static_cast<double>(ret), h = static_cast<double>(jump), cl = static_cast<double>(col);
    row.ret = detail::mean_of(r, r, 2 * n);
    row.collision = detail::mean_of(cl, cl, n);
    // (1{X=0} - 1{X=J})^2 = 1{X=0} + 1{X=J} since J != 0.
    row.energy = detail::mean_of(q * (r - h), q * q * (r + h), 2 * n);
    out.rows.push_back(row);
  }

  if (!s_grid.empty()) {
    double horizon = 0.0;
    for (double s : s_grid) horizon = std::max(horizon, std::max(1.0, std::log(1.0 / (s * tail_tol)) / s));
    const std::size_t ns = s_grid.size();
    const std::uint64_t key = mix64(seed) ^ mix64(0x2000);
    std::vector<std::vector<double>> sums(blocks, std::vector<double>(2 * ns, 0.0));
    parallel_blocks(blocks, [&](std::size_t b) {
      const std::size_t end = std::min(n, (b + 1) * detail::kWalkBlock);
      std::vector<double> occ(ns);
      for (std::size_t j = b * detail::kWalkBlock; j < end; ++j) {
        auto rng = stream_for(key, j);
        std::exponential_distribution<double> wait(q > 0.0 ? q : 1.0);
        std::fill(occ.begin(), occ.end(), 0.0);
        Point x = origin;
        double now = 0.0;
        while (now < horizon) {
          const double next = q > 0.0 ? std::min(horizon, now + wait(rng)) : horizon;
          if (x == origin)
            for (std::size_t k = 0; k < ns; ++k)
              occ[k] += (std::exp(-s_grid[k] * now) - std::exp(-s_grid[k] * next)) / s_grid[k];
          now = next;
          if (now >= horizon) break;
          const auto [p, sign] = sampler.draw(rng);
          for (std::size_t d = 0; d < x.size(); ++d) x[d] += sign * nu.pairs[p].kappa[d];
        }
        for (std::size_t k = 0; k < ns; ++k) {
          sums[b][k] += occ[k];
          sums[b][ns + k] += occ[k] * occ[k];
        }
      }
    });
    for (std::size_t k = 0; k < ns; ++k) {
      double s1 = 0.0, s2 = 0.0;
      for (const auto& blk : sums) {
        s1 += blk[k];
        s2 += blk[ns + k];
      }
      WalkResolventRow row;
      row.s = s_grid[k];
      row.value = detail::mean_of(s1, s2, n);
      row.bias = std::exp(-row.s * horizon) / row.s;
      out.resolvent.push_back(row);
    }
  }
  return out;
}

}  // namespace vpdheat
