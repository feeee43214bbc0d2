#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <set>
#include <utility>
#include <vector>

#include "vpdheat/lattice.hpp"
#include "vpdheat/metric.hpp"

namespace vpdheat {

/// Element of K(X_F, A) = Z^F: one signed coefficient per generator of the
/// ambient GroundSpace. Zero coefficients are simply absent from the support.
using VpdElement = Point;

/// A point of a persistence diagram with its multiplicity, independent of
/// any ground space. Multiplicity is signed for virtual diagrams.
struct DiagramPoint {
  BirthDeathPoint point;
  int multiplicity = 1;
};

/// Persistence diagram over a GroundSpace: nonnegative count per generator.
struct Diagram {
  std::vector<int> counts;

  std::size_t size() const {
    return static_cast<std::size_t>(std::accumulate(counts.begin(), counts.end(), 0));
  }
};

// --- group operations ---------------------------------------------------

inline VpdElement add(const VpdElement& a, const VpdElement& b) {
  require(a.size() == b.size(), "add: elements live in different ambient spaces");
  return a + b;
}

inline VpdElement negate(const VpdElement& a) { return -a; }

inline VpdElement as_element(const Diagram& d) {
  return VpdElement(d.counts.begin(), d.counts.end());
}

/// The virtual diagram a - b.
inline VpdElement vpd_diff(const Diagram& a, const Diagram& b) {
  require(a.counts.size() == b.counts.size(), "vpd_diff: diagrams use different ground spaces");
  return as_element(a) - as_element(b);
}

/// Positive and negative parts: g = pos - neg with disjoint supports.
inline std::pair<Diagram, Diagram> split(const VpdElement& g) {
  Diagram pos{std::vector<int>(g.size(), 0)};
  Diagram neg{std::vector<int>(g.size(), 0)};
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] > 0) pos.counts[i] = g[i];
    if (g[i] < 0) neg.counts[i] = -g[i];
  }
  return {pos, neg};
}

/// Mass functional: sum of |n_u| * d1(u, [A]).
inline double mass(const GroundSpace& space, const VpdElement& g) {
  require(g.size() == space.rank(), "mass: element rank does not match the ground space");
  double m = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) m += std::abs(g[i]) * space.to_base(i);
  return m;
}

// --- diagrams over birth–death spaces ---------------------------------------

/// Ground space spanned by every point appearing in the given diagrams.
inline GroundSpace ground_space_of(const std::vector<std::vector<DiagramPoint>>& diagrams) {
  std::vector<BirthDeathPoint> pts;
  for (const auto& d : diagrams)
    for (const auto& p : d) pts.push_back(p.point);
  return birth_death_space(std::move(pts));
}

inline VpdElement element_of(const GroundSpace& space, const std::vector<DiagramPoint>& pts) {
  VpdElement g(space.rank(), 0);
  for (const auto& p : pts) {
    const std::size_t i = space.index_of(p.point);
    require(i < space.rank(), "diagram point " + point_label(p.point) + " is not a generator");
    g[i] += p.multiplicity;
  }
  return g;
}

inline Diagram diagram_of(const GroundSpace& space, const std::vector<DiagramPoint>& pts) {
  const VpdElement g = element_of(space, pts);
  Diagram d{std::vector<int>(g.begin(), g.end())};
  for (int c : d.counts) require(c >= 0, "diagram_of: plain diagrams need positive multiplicities");
  return d;
}

/// Nonzero coefficients as (point, signed multiplicity), in generator order.
inline std::vector<DiagramPoint> points_of(const GroundSpace& space, const VpdElement& g) {
  require(space.has_coords() || space.rank() == 0, "points_of: ground space has no birth–death coordinates");
  std::vector<DiagramPoint> out;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g[i] != 0) out.push_back({space.coords()[i], g[i]});
  return out;
}

// --- 0-dimensional persistence of weighted graphs ------------------------

struct WeightedEdge {
  int u = 0;
  int v = 0;
  double weight = 0.0;
};

struct WeightedGraph {
  int vertex_count = 0;
  std::vector<WeightedEdge> edges;
};

inline void validate(const WeightedGraph& g) {
  require(g.vertex_count >= 0, "graph: vertex count must be nonnegative");
  std::set<std::pair<int, int>> seen;
  for (const auto& e : g.edges) {
    require(0 <= e.u && e.u < e.v && e.v < g.vertex_count,
            "graph: edges need 0 <= u < v < vertex_count");
    require(std::isfinite(e.weight) && e.weight > 0.0, "graph: weights must be finite and > 0");
    require(seen.insert({e.u, e.v}).second, "graph: duplicate edge");
  }
}

class UnionFind {
public:
  explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  /// Merges the classes of a and b; false when they already coincide.
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    return true;
  }

private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

/// H0 persistence of the edge-weight filtration. Every vertex is born at 0,
/// each merge emits (0, weight); essential classes are dropped. Output is
/// sorted by death with equal points collapsed into multiplicities.
inline std::vector<DiagramPoint> h0_persistence(const WeightedGraph& graph) {
  validate(graph);
  std::vector<std::size_t> order(graph.edges.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return graph.edges[a].weight < graph.edges[b].weight;
  });

  UnionFind uf(static_cast<std::size_t>(graph.vertex_count));
  std::vector<DiagramPoint> out;
  for (std::size_t idx : order) {
    const auto& e = graph.edges[idx];
    if (!uf.unite(static_cast<std::size_t>(e.u), static_cast<std::size_t>(e.v))) continue;
    const BirthDeathPoint p{0.0, e.weight};
    if (!out.empty() && out.back().point == p)
      ++out.back().multiplicity;
    else
      out.push_back({p, 1});
  }
  return out;
}

}  // namespace vpdheat
