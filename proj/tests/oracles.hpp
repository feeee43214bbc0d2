#pragma once
// Independent reference implementations used only by the tests.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <queue>
#include <random>
#include <vector>

#include "vpdheat/diagram.hpp"
#include "vpdheat/levy.hpp"
#include "vpdheat/metric.hpp"
#include "vpdheat/spectral.hpp"

namespace oracle {

using namespace vpdheat;

// Modified Bessel function of the first kind by its power series.
inline double bessel_i(int n, double x) {
  n = std::abs(n);
  double term = std::pow(x / 2.0, n) / std::tgamma(n + 1.0);
  double sum = term;
  for (int k = 1; k < 200; ++k) {
    term *= (x / 2.0) * (x / 2.0) / (k * static_cast<double>(k + n));
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return sum;
}

// Two generators at d1 = 1, each at distance 1 from the diagonal, with
// psi(1) = 2: nu(+-kappa) = 1, q = 2, lambda = 2(1 - cos(theta_x - theta_y)).
inline GroundSpace two_point_space(double d = 1.0, double to_base = 1.0) {
  return GroundSpace({"x", "y"}, {{0.0, d}, {d, 0.0}}, {to_base, to_base});
}

inline Profile unit_rate_profile() { return Profile::tabulated({{1.0, 2.0}}); }

inline JumpMeasure unit_walk() { return build_nu(two_point_space(), unit_rate_profile()); }

// Exact p_t(n kappa) for the unit walk: e^{-2t} I_n(2t).
inline double unit_walk_kernel(int n, double t) { return std::exp(-2.0 * t) * bessel_i(n, 2.0 * t); }

// Random ground space of the given rank: random planar points above the
// line A = {y = 0}, Euclidean distances, then strengthened.
inline GroundSpace random_space(std::size_t rank, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coord(0.0, 3.0), height(0.3, 2.0);
  MetricPair pair;
  std::vector<std::array<double, 2>> pts(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    pts[i] = {coord(rng), height(rng)};
    pair.points.push_back("p" + std::to_string(i));
    pair.diagonal_dist.push_back(pts[i][1]);
  }
  pair.dist.assign(rank, std::vector<double>(rank, 0.0));
  for (std::size_t i = 0; i < rank; ++i)
    for (std::size_t j = 0; j < rank; ++j)
      pair.dist[i][j] = std::hypot(pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]);
  return strengthen(pair);
}

// Exhaustive minimum over partial matchings; unmatched points go to [A].
inline double brute_w1(const GroundSpace& space, const std::vector<std::size_t>& left,
                       const std::vector<std::size_t>& right) {
  std::vector<char> used(right.size(), 0);
  std::function<double(std::size_t)> go = [&](std::size_t i) -> double {
    if (i == left.size()) {
      double c = 0.0;
      for (std::size_t j = 0; j < right.size(); ++j)
        if (!used[j]) c += space.to_base(right[j]);
      return c;
    }
    double best = space.to_base(left[i]) + go(i + 1);
    for (std::size_t j = 0; j < right.size(); ++j) {
      if (used[j]) continue;
      used[j] = 1;
      best = std::min(best, space.distance(left[i], right[j]) + go(i + 1));
      used[j] = 0;
    }
    return best;
  };
  return go(0);
}

// H0 diagram by scanning thresholds: at each distinct weight w, count the
// components of the subgraph with edges of weight <= w; the drop in the
// count is the number of deaths at w.
inline std::vector<DiagramPoint> threshold_scan_h0(const WeightedGraph& g) {
  std::vector<double> levels;
  for (const auto& e : g.edges) levels.push_back(e.weight);
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  auto components = [&](double w) {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(g.vertex_count));
    for (const auto& e : g.edges)
      if (e.weight <= w) {
        adj[static_cast<std::size_t>(e.u)].push_back(e.v);
        adj[static_cast<std::size_t>(e.v)].push_back(e.u);
      }
    std::vector<char> seen(adj.size(), 0);
    int count = 0;
    for (std::size_t s = 0; s < adj.size(); ++s) {
      if (seen[s]) continue;
      ++count;
      std::queue<std::size_t> bfs;
      bfs.push(s);
      seen[s] = 1;
      while (!bfs.empty()) {
        const auto u = bfs.front();
        bfs.pop();
        for (int v : adj[u])
          if (!seen[static_cast<std::size_t>(v)]) {
            seen[static_cast<std::size_t>(v)] = 1;
            bfs.push(static_cast<std::size_t>(v));
          }
      }
    }
    return count;
  };
  std::vector<DiagramPoint> out;
  int prev = g.vertex_count;
  for (double w : levels) {
    const int c = components(w);
    if (prev > c) out.push_back({{0.0, w}, prev - c});
    prev = c;
  }
  return out;
}

inline WeightedGraph random_graph(int max_vertices, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nv(1, max_vertices), w(1, 6);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  WeightedGraph g;
  g.vertex_count = nv(rng);
  const double density = coin(rng);
  for (int u = 0; u < g.vertex_count; ++u)
    for (int v = u + 1; v < g.vertex_count; ++v)
      if (coin(rng) < density) g.edges.push_back({u, v, static_cast<double>(w(rng))});
  std::shuffle(g.edges.begin(), g.edges.end(), rng);
  return g;
}

// S_3 as permutations of {0,1,2}; word metric for generators (01), (12);
// A = {identity}. Returns the ground space on the five non-identity
// elements and the index of the 3-cycle (0 1 2).
inline std::pair<GroundSpace, std::size_t> s3_word_metric() {
  using Perm = std::array<int, 3>;
  auto compose = [](const Perm& a, const Perm& b) {  // a after b
    return Perm{a[b[0]], a[b[1]], a[b[2]]};
  };
  std::vector<Perm> elems;
  Perm p{0, 1, 2};
  do elems.push_back(p);
  while (std::next_permutation(p.begin(), p.end()));
  const std::vector<Perm> gens{{1, 0, 2}, {0, 2, 1}};
  auto index = [&](const Perm& x) {
    return static_cast<std::size_t>(std::find(elems.begin(), elems.end(), x) - elems.begin());
  };
  // All-pairs BFS on the Cayley graph (right multiplication).
  const std::size_t n = elems.size();
  Matrix d(n, std::vector<double>(n, 0.0));
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<int> dist(n, -1);
    std::queue<std::size_t> q;
    dist[s] = 0;
    q.push(s);
    while (!q.empty()) {
      const auto u = q.front();
      q.pop();
      for (const auto& g : gens) {
        const auto v = index(compose(elems[u], g));
        if (dist[v] < 0) {
          dist[v] = dist[u] + 1;
          q.push(v);
        }
      }
    }
    for (std::size_t t = 0; t < n; ++t) d[s][t] = dist[t];
  }
  const std::size_t id = index(Perm{0, 1, 2});
  MetricPair pair;
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < n; ++i)
    if (i != id) keep.push_back(i);
  pair.dist.assign(keep.size(), std::vector<double>(keep.size(), 0.0));
  for (std::size_t i = 0; i < keep.size(); ++i) {
    const auto& e = elems[keep[i]];
    pair.points.push_back(std::to_string(e[0]) + std::to_string(e[1]) + std::to_string(e[2]));
    pair.diagonal_dist.push_back(d[keep[i]][id]);
    for (std::size_t j = 0; j < keep.size(); ++j) pair.dist[i][j] = d[keep[i]][keep[j]];
  }
  // The 3-cycle 0->1->2->0 in one-line notation is (1,2,0).
  const std::size_t cycle = static_cast<std::size_t>(
      std::find(keep.begin(), keep.end(), index(Perm{1, 2, 0})) - keep.begin());
  return {strengthen(pair), cycle};
}

}  // namespace oracle
