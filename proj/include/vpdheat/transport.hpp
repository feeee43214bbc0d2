#pragma once

#include <algorithm>
#include <limits>
#include <vector>

#include "vpdheat/diagram.hpp"
#include "vpdheat/metric.hpp"

namespace vpdheat {

struct Assignment {
  double cost = 0.0;
  std::vector<std::size_t> column_of_row;
};

/// Exact minimum-cost perfect assignment on a square cost matrix
/// (Hungarian method with row/column potentials, O(n^3)).
inline Assignment solve_assignment(const Matrix& cost) {
  const std::size_t n = cost.size();
  Assignment out;
  out.column_of_row.assign(n, 0);
  if (n == 0) return out;
  constexpr double inf = std::numeric_limits<double>::infinity();

  // 1-based arrays; column 0 is a virtual column used to seed each row.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  for (std::size_t j = 1; j <= n; ++j) out.column_of_row[p[j] - 1] = j - 1;
  for (std::size_t i = 0; i < n; ++i) out.cost += cost[i][out.column_of_row[i]];
  return out;
}

/// Generator index per unit of multiplicity.
inline std::vector<std::size_t> expand(const Diagram& d) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < d.counts.size(); ++i)
    for (int k = 0; k < d.counts[i]; ++k) out.push_back(i);
  return out;
}

/// Sink-augmented square cost matrix: left points plus one sink copy per
/// right point, against right points plus one sink copy per left point.
inline Matrix sink_augmented_costs(const GroundSpace& space, const std::vector<std::size_t>& left,
                                   const std::vector<std::size_t>& right) {
  const std::size_t n = left.size(), m = right.size(), dim = n + m;
  Matrix c(dim, std::vector<double>(dim, 0.0));
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) {
      const bool real_row = i < n, real_col = j < m;
      if (real_row && real_col)
        c[i][j] = space.distance(left[i], right[j]);
      else if (real_row)
        c[i][j] = space.to_base(left[i]);
      else if (real_col)
        c[i][j] = space.to_base(right[j]);
    }
  return c;
}

/// 1-Wasserstein distance between diagrams with the basepoint [A] as sink.
inline double w1(const GroundSpace& space, const Diagram& a, const Diagram& b) {
  require(a.counts.size() == space.rank() && b.counts.size() == space.rank(),
          "w1: diagrams do not match the ground space");
  // Mass common to both sides is matched to itself at zero cost.
  Diagram left = a, right = b;
  for (std::size_t i = 0; i < space.rank(); ++i) {
    const int common = std::min(left.counts[i], right.counts[i]);
    left.counts[i] -= common;
    right.counts[i] -= common;
  }
  const auto l = expand(left), r = expand(right);
  if (l.empty() && r.empty()) return 0.0;
  return solve_assignment(sink_augmented_costs(space, l, r)).cost;
}

/// Translation-invariant transport metric on K(X_F, A).
inline double rho(const GroundSpace& space, const VpdElement& g, const VpdElement& h) {
  require(g.size() == space.rank() && h.size() == space.rank(),
          "rho: elements do not match the ground space");
  const auto [pos, neg] = split(g - h);
  return w1(space, pos, neg);
}

inline double rho_to_zero(const GroundSpace& space, const VpdElement& g) {
  return rho(space, g, zero_point(space.rank()));
}

}  // namespace vpdheat
