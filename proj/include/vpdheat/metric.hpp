#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "vpdheat/common.hpp"

namespace vpdheat {

using Matrix = std::vector<std::vector<double>>;

/// A finite metric pair (X, d, A): pairwise distances on the listed points
/// plus each point's distance to the distinguished subset A.
struct MetricPair {
  std::vector<std::string> points;
  Matrix dist;
  std::vector<double> diagonal_dist;
};

struct BirthDeathPoint {
  double birth = 0.0;
  double death = 0.0;

  double persistence() const { return death - birth; }
  friend bool operator==(const BirthDeathPoint&, const BirthDeathPoint&) = default;
  friend auto operator<=>(const BirthDeathPoint&, const BirthDeathPoint&) = default;
};

/// The quotient (X/A, d1, [A]) restricted to a finite generator set F.
/// Index rank() stands for the basepoint [A] in distance().
class GroundSpace {
public:
  GroundSpace() = default;
  GroundSpace(std::vector<std::string> labels, Matrix d1, std::vector<double> d1_to_base,
              std::vector<BirthDeathPoint> coords = {})
      : labels_(std::move(labels)),
        d1_(std::move(d1)),
        to_base_(std::move(d1_to_base)),
        coords_(std::move(coords)) {}

  std::size_t rank() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  const Matrix& d1() const { return d1_; }
  const std::vector<double>& d1_to_base() const { return to_base_; }
  double d1(std::size_t x, std::size_t y) const { return d1_[x][y]; }
  double to_base(std::size_t x) const { return to_base_[x]; }

  /// Distance on F ∪ {[A]}; index rank() is the basepoint.
  double distance(std::size_t u, std::size_t v) const {
    const std::size_t base = rank();
    if (u == v) return 0.0;
    if (u == base) return to_base_[v];
    if (v == base) return to_base_[u];
    return d1_[u][v];
  }

  /// Birth–death coordinates of each generator, when the space came from
  /// persistence diagrams. Empty for abstract spaces.
  const std::vector<BirthDeathPoint>& coords() const { return coords_; }
  bool has_coords() const { return !coords_.empty(); }

  /// Index of a birth–death coordinate, or rank() when absent.
  std::size_t index_of(const BirthDeathPoint& p) const {
    auto it = std::lower_bound(coords_.begin(), coords_.end(), p);
    if (it != coords_.end() && *it == p) return static_cast<std::size_t>(it - coords_.begin());
    return rank();
  }

  /// Same space with every distance multiplied by factor.
  GroundSpace rescaled(double factor) const {
    Matrix d = d1_;
    for (auto& row : d)
      for (auto& v : row) v *= factor;
    std::vector<double> b = to_base_;
    for (auto& v : b) v *= factor;
    return GroundSpace(labels_, std::move(d), std::move(b), coords_);
  }

  /// Sub-space on the listed generator indices (in the given order).
  GroundSpace subspace(const std::vector<std::size_t>& idx) const {
    std::vector<std::string> lab;
    Matrix d(idx.size(), std::vector<double>(idx.size(), 0.0));
    std::vector<double> b;
    std::vector<BirthDeathPoint> c;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      lab.push_back(labels_[idx[i]]);
      b.push_back(to_base_[idx[i]]);
      if (has_coords()) c.push_back(coords_[idx[i]]);
      for (std::size_t j = 0; j < idx.size(); ++j) d[i][j] = d1_[idx[i]][idx[j]];
    }
    return GroundSpace(std::move(lab), std::move(d), std::move(b), std::move(c));
  }

private:
  std::vector<std::string> labels_;
  Matrix d1_;
  std::vector<double> to_base_;
  std::vector<BirthDeathPoint> coords_;
};

/// Checks the metric axioms of pair.dist and nonnegativity of the diagonal
/// distances; throws on violation.
inline void validate(const MetricPair& pair) {
  const std::size_t n = pair.points.size();
  require(pair.dist.size() == n && pair.diagonal_dist.size() == n,
          "metric pair: table sizes do not match the point list");
  for (std::size_t i = 0; i < n; ++i) {
    require(pair.dist[i].size() == n, "metric pair: distance table is not square");
    require(std::isfinite(pair.diagonal_dist[i]) && pair.diagonal_dist[i] >= 0.0,
            "metric pair: diagonal distance must be finite and nonnegative");
    require(std::abs(pair.dist[i][i]) <= kMetricTol, "metric pair: dist(x,x) must be 0");
    for (std::size_t j = 0; j < n; ++j) {
      const double dij = pair.dist[i][j];
      require(std::isfinite(dij) && dij >= 0.0, "metric pair: distances must be finite and >= 0");
      require(std::abs(dij - pair.dist[j][i]) <= kMetricTol, "metric pair: distance not symmetric");
      require(std::abs(pair.diagonal_dist[i] - pair.diagonal_dist[j]) <= dij + kMetricTol,
              "metric pair: distance to A is not 1-Lipschitz");
      for (std::size_t k = 0; k < n; ++k)
        require(dij <= pair.dist[i][k] + pair.dist[k][j] + kMetricTol,
                "metric pair: triangle inequality violated");
    }
  }
}

/// The 1-strengthened metric d1(x,y) = min(d(x,y), d(x,A) + d(y,A)) on the
/// generators, with d1(x,[A]) = d(x,A).
inline GroundSpace strengthen(const MetricPair& pair,
                              std::vector<BirthDeathPoint> coords = {}) {
  validate(pair);
  const std::size_t n = pair.points.size();
  for (std::size_t i = 0; i < n; ++i)
    if (pair.diagonal_dist[i] <= 0.0)
      fail("strengthen: point '" + pair.points[i] +
           "' lies in A (diagonal distance 0) and cannot be a generator");
  Matrix d1(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j)
        d1[i][j] = std::min(pair.dist[i][j], pair.diagonal_dist[i] + pair.diagonal_dist[j]);
  return GroundSpace(pair.points, std::move(d1), pair.diagonal_dist, std::move(coords));
}

inline std::string point_label(const BirthDeathPoint& p) {
  auto fmt = [](double v) {
    std::string s = std::to_string(v);
    s.erase(s.find_last_not_of('0') + 1);
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
  };
  return "(" + fmt(p.birth) + "," + fmt(p.death) + ")";
}

/// Ground space of birth–death points: sup-norm distance on R^2, distance
/// (death - birth)/2 to the diagonal, then strengthened. Duplicate
/// coordinates collapse; generators are sorted by (birth, death).
inline GroundSpace birth_death_space(std::vector<BirthDeathPoint> points) {
  for (const auto& p : points) {
    require(std::isfinite(p.birth) && std::isfinite(p.death),
            "birth_death_space: coordinates must be finite (essential classes are not supported)");
    require(p.birth < p.death, "birth_death_space: every point needs birth < death");
  }
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());

  MetricPair pair;
  const std::size_t n = points.size();
  pair.dist.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    pair.points.push_back(point_label(points[i]));
    pair.diagonal_dist.push_back(points[i].persistence() / 2.0);
    for (std::size_t j = 0; j < n; ++j)
      pair.dist[i][j] = std::max(std::abs(points[i].birth - points[j].birth),
                                 std::abs(points[i].death - points[j].death));
  }
  return strengthen(pair, std::move(points));
}

/// Exhaustive metric check of d1 on F ∪ {[A]}: returns the largest violation
/// of symmetry or the triangle inequality (0 when d1 is a metric).
inline double metric_violation(const GroundSpace& space) {
  const std::size_t m = space.rank() + 1;
  double worst = 0.0;
  for (std::size_t u = 0; u < m; ++u)
    for (std::size_t v = 0; v < m; ++v) {
      const double duv = space.distance(u, v);
      worst = std::max(worst, std::abs(duv - space.distance(v, u)));
      if (u != v && duv <= 0.0) worst = std::max(worst, 1.0);
      for (std::size_t w = 0; w < m; ++w)
        worst = std::max(worst, duv - space.distance(u, w) - space.distance(w, v));
    }
  return worst;
}

}  // namespace vpdheat
