#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "vpdheat/common.hpp"

namespace vpdheat {

/// How integrals over the dual torus T^r are evaluated.
struct QuadratureSpec {
  enum class Kind { grid, monte_carlo };

  Kind kind = Kind::grid;
  std::size_t nodes = 64;          // grid: starting nodes per dimension
  std::size_t samples = 100000;    // monte_carlo
  std::uint64_t seed = 1;          // monte_carlo
  std::size_t max_grid_rank = 4;   // cost guard
  std::size_t max_total_nodes = std::size_t{1} << 25;
  double agreement = 1e-10;        // grid doubling stops when successive values agree

  static QuadratureSpec grid(std::size_t n = 64) {
    QuadratureSpec q;
    q.kind = Kind::grid;
    q.nodes = n;
    return q;
  }
  static QuadratureSpec monte_carlo(std::size_t samples, std::uint64_t seed) {
    QuadratureSpec q;
    q.kind = Kind::monte_carlo;
    q.samples = samples;
    q.seed = seed;
    return q;
  }

  void validate() const {
    if (kind == Kind::grid)
      require(nodes >= 8 && nodes % 2 == 0, "quadrature: grid needs an even node count >= 8");
    else
      require(samples >= 10000, "quadrature: monte-carlo needs at least 10^4 samples");
  }

  std::string describe() const {
    return kind == Kind::grid ? "grid:" + std::to_string(nodes)
                              : "mc:" + std::to_string(samples) + ":" + std::to_string(seed);
  }
};

/// Integral estimates with an error indicator per component: the change over
/// the last grid doubling, or the Monte Carlo standard error.
struct QuadResult {
  std::vector<double> values;
  std::vector<double> errors;
  std::size_t nodes_per_dim = 0;   // grid only
  std::size_t evaluations = 0;
  bool converged = true;
  bool monte_carlo = false;
};

/// Integrand over T^r: writes `count` values for angle vector theta.
using TorusIntegrand = std::function<void(const std::vector<double>& theta, double* out)>;

namespace detail {

inline std::size_t ipow(std::size_t base, std::size_t e) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < e; ++i) r *= base;
  return r;
}

// Periodic trapezoid rule with n nodes per dimension. Returns the n-node and
// the embedded n/2-node estimates (every other node).
inline void grid_pass(std::size_t rank, std::size_t n, std::size_t count,
                      const TorusIntegrand& f, std::vector<double>& fine,
                      std::vector<double>& coarse) {
  const std::size_t inner = rank == 0 ? 1 : ipow(n, rank - 1);
  const std::size_t blocks = rank == 0 ? 1 : n;
  std::vector<std::vector<double>> bf(blocks, std::vector<double>(count, 0.0));
  std::vector<std::vector<double>> bc(blocks, std::vector<double>(count, 0.0));
  const double h = kTwoPi / static_cast<double>(n);
  parallel_blocks(blocks, [&](std::size_t b) {
    std::vector<double> theta(rank, 0.0), val(count);
    std::vector<std::size_t> idx(rank, 0);
    if (rank > 0) idx[0] = b;
    for (std::size_t k = 0; k < inner; ++k) {
      std::size_t rem = k;
      bool even = rank == 0 || b % 2 == 0;
      for (std::size_t d = 1; d < rank; ++d) {
        idx[d] = rem % n;
        rem /= n;
        even = even && idx[d] % 2 == 0;
      }
      for (std::size_t d = 0; d < rank; ++d) theta[d] = h * static_cast<double>(idx[d]);
      f(theta, val.data());
      for (std::size_t c = 0; c < count; ++c) {
        bf[b][c] += val[c];
        if (even) bc[b][c] += val[c];
      }
    }
  });
  fine.assign(count, 0.0);
  coarse.assign(count, 0.0);
  for (std::size_t b = 0; b < blocks; ++b)
    for (std::size_t c = 0; c < count; ++c) {
      fine[c] += bf[b][c];
      coarse[c] += bc[b][c];
    }
  const double wf = 1.0 / static_cast<double>(ipow(n, rank));
  const double wc = 1.0 / static_cast<double>(ipow(n / 2, rank));
  for (std::size_t c = 0; c < count; ++c) {
    fine[c] *= wf;
    coarse[c] *= wc;
  }
}

}  // namespace detail

/// Integrates `count` functions against normalized Haar measure on T^rank.
/// Grid: periodic trapezoid, doubling from max(spec.nodes, min_nodes) until
/// the n and n/2 estimates agree (relative to max(1,|value|)) or the node
/// budget is exhausted. Monte Carlo: i.i.d. uniform angles in fixed blocks.
inline QuadResult integrate_torus(std::size_t rank, const QuadratureSpec& spec, std::size_t count,
                                  const TorusIntegrand& f, std::size_t min_nodes = 0) {
  spec.validate();
  QuadResult res;
  if (spec.kind == QuadratureSpec::Kind::grid) {
    if (rank > spec.max_grid_rank)
      throw Error(ErrorKind::cost_guard,
                  "grid quadrature limited to rank <= " + std::to_string(spec.max_grid_rank) +
                      " (rank " + std::to_string(rank) + " requested); use monte-carlo quadrature");
    std::size_t n = std::max(spec.nodes, min_nodes);
    if (n % 2) ++n;
    std::vector<double> fine, coarse;
    while (true) {
      detail::grid_pass(rank, n, count, f, fine, coarse);
      res.evaluations += detail::ipow(n, rank);
      double worst = 0.0;
      res.errors.assign(count, 0.0);
      for (std::size_t c = 0; c < count; ++c) {
        res.errors[c] = std::abs(fine[c] - coarse[c]);
        worst = std::max(worst, res.errors[c] / std::max(1.0, std::abs(fine[c])));
      }
      res.values = fine;
      res.nodes_per_dim = n;
      if (worst <= spec.agreement || rank == 0) break;
      if (detail::ipow(2 * n, rank) > spec.max_total_nodes) {
        res.converged = false;
        break;
      }
      n *= 2;
    }
    return res;
  }

  res.monte_carlo = true;
  constexpr std::size_t block = 4096;
  const std::size_t blocks = (spec.samples + block - 1) / block;
  std::vector<std::vector<double>> s1(blocks, std::vector<double>(count, 0.0));
  std::vector<std::vector<double>> s2(blocks, std::vector<double>(count, 0.0));
  parallel_blocks(blocks, [&](std::size_t b) {
    auto rng = stream_for(spec.seed, b);
    std::uniform_real_distribution<double> unif(0.0, kTwoPi);
    std::vector<double> theta(rank), val(count);
    const std::size_t end = std::min(spec.samples, (b + 1) * block);
    for (std::size_t i = b * block; i < end; ++i) {
      for (auto& a : theta) a = unif(rng);
      f(theta, val.data());
      for (std::size_t c = 0; c < count; ++c) {
        s1[b][c] += val[c];
        s2[b][c] += val[c] * val[c];
      }
    }
  });
  const double n = static_cast<double>(spec.samples);
  res.values.assign(count, 0.0);
  res.errors.assign(count, 0.0);
  std::vector<double> sq(count, 0.0);
  for (std::size_t b = 0; b < blocks; ++b)
    for (std::size_t c = 0; c < count; ++c) {
      res.values[c] += s1[b][c];
      sq[c] += s2[b][c];
    }
  for (std::size_t c = 0; c < count; ++c) {
    const double mean = res.values[c] / n;
    const double var = std::max(0.0, sq[c] / n - mean * mean) * n / (n - 1.0);
    res.values[c] = mean;
    res.errors[c] = std::sqrt(var / n);
  }
  res.evaluations = spec.samples;
  return res;
}

/// Gauss–Legendre nodes and weights on [-1, 1].
inline void gauss_legendre(std::size_t n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(kPi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (std::size_t k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / static_cast<double>(k);
      }
      dp = static_cast<double>(n) * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

}  // namespace vpdheat
