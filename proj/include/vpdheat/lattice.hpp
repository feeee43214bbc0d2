#pragma once

#include <cstddef>
#include <cstdint>
#include <unordered_map>
#include <vector>

namespace vpdheat {

/// A point of Z^r, one coordinate per generator.
using Point = std::vector<int>;

struct PointHash {
  std::size_t operator()(const Point& p) const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (int c : p) {
      h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(c));
      h *= 0x100000001b3ULL;
      h ^= h >> 29;
    }
    return static_cast<std::size_t>(h);
  }
};

/// Finitely supported real function on Z^r.
using LatticeMap = std::unordered_map<Point, double, PointHash>;

inline Point zero_point(std::size_t rank) { return Point(rank, 0); }

inline bool is_zero(const Point& p) {
  for (int c : p)
    if (c != 0) return false;
  return true;
}

inline Point operator+(const Point& a, const Point& b) {
  Point r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline Point operator-(const Point& a, const Point& b) {
  Point r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline Point operator-(const Point& a) {
  Point r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = -a[i];
  return r;
}

inline Point scaled(const Point& a, int n) {
  Point r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = n * a[i];
  return r;
}

inline int linf_norm(const Point& p) {
  int m = 0;
  for (int c : p) m = c < 0 ? (-c > m ? -c : m) : (c > m ? c : m);
  return m;
}

inline double dot(const Point& g, const std::vector<double>& theta) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) s += g[i] * theta[i];
  return s;
}

inline double value_at(const LatticeMap& f, const Point& g) {
  auto it = f.find(g);
  return it == f.end() ? 0.0 : it->second;
}

inline double total_mass(const LatticeMap& f) {
  double s = 0.0;
  for (const auto& [_, v] : f) s += v;
  return s;
}

}  // namespace vpdheat
