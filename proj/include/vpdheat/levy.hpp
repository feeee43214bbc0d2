#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "vpdheat/common.hpp"
#include "vpdheat/diagram.hpp"
#include "vpdheat/lattice.hpp"
#include "vpdheat/metric.hpp"
#include "vpdheat/transport.hpp"

namespace vpdheat {

/// Jump profile psi: rate as a function of ground distance r > 0.
struct Profile {
  enum class Kind { exponential, gaussian, power, table };

  Kind kind = Kind::exponential;
  double alpha = 1.0;                              // exponential, gaussian
  double scale = 1.0;                              // power: c
  double exponent = 1.0;                           // power: p
  double cutoff = 0.0;                             // power: r0 (0 = clamp at min distance)
  std::vector<std::pair<double, double>> table;    // (r, psi), sorted by r

  static Profile exponential(double alpha) {
    Profile p;
    p.kind = Kind::exponential;
    p.alpha = alpha;
    return p;
  }
  static Profile gaussian(double alpha) {
    Profile p;
    p.kind = Kind::gaussian;
    p.alpha = alpha;
    return p;
  }
  static Profile power(double c, double exponent, double r0 = 0.0) {
    Profile p;
    p.kind = Kind::power;
    p.scale = c;
    p.exponent = exponent;
    p.cutoff = r0;
    return p;
  }
  static Profile tabulated(std::vector<std::pair<double, double>> rows) {
    Profile p;
    p.kind = Kind::table;
    std::sort(rows.begin(), rows.end());
    p.table = std::move(rows);
    return p;
  }

  /// psi(r); psi(0) is 0 by convention. Tables interpolate linearly and
  /// extend as constants beyond their ends.
  double operator()(double r) const {
    if (r <= 0.0) return 0.0;
    switch (kind) {
      case Kind::exponential:
        return std::exp(-alpha * r);
      case Kind::gaussian:
        return std::exp(-alpha * r * r);
      case Kind::power:
        return scale * std::pow(std::max(r, cutoff), -exponent);
      case Kind::table: {
        if (table.empty()) return 0.0;
        if (r <= table.front().first) return table.front().second;
        if (r >= table.back().first) return table.back().second;
        auto hi = std::lower_bound(table.begin(), table.end(), std::make_pair(r, -std::numeric_limits<double>::infinity()));
        auto lo = hi - 1;
        if (hi->first == r) return hi->second;
        const double w = (r - lo->first) / (hi->first - lo->first);
        return (1.0 - w) * lo->second + w * hi->second;
      }
    }
    return 0.0;
  }

  void validate() const {
    switch (kind) {
      case Kind::exponential:
      case Kind::gaussian:
        require(std::isfinite(alpha) && alpha > 0.0, "profile: alpha must be positive");
        break;
      case Kind::power:
        require(scale > 0.0 && exponent > 0.0 && cutoff >= 0.0,
                "profile: power needs c > 0, p > 0, r0 >= 0");
        break;
      case Kind::table:
        require(!table.empty(), "profile: empty table");
        for (const auto& [r, v] : table)
          require(std::isfinite(r) && r >= 0.0 && std::isfinite(v) && v >= 0.0,
                  "profile: table rows need finite r >= 0 and psi >= 0");
        break;
    }
  }
};

/// One symmetric pair of jumps {kappa, -kappa}, each carrying `rate`.
struct JumpPair {
  Point kappa;
  double rate = 0.0;
};

/// Symmetric finite jump measure on Z^F. Storing kappa and -kappa together
/// makes nu(kappa) = nu(-kappa) hold exactly.
struct JumpMeasure {
  std::size_t rank = 0;
  std::vector<JumpPair> pairs;

  /// Total rate q = sum over all jumps (both signs).
  double total_rate() const {
    double q = 0.0;
    for (const auto& p : pairs) q += 2.0 * p.rate;
    return q;
  }
  bool empty() const { return pairs.empty(); }
  JumpMeasure scaled(double factor) const {
    JumpMeasure out = *this;
    for (auto& p : out.pairs) p.rate *= factor;
    return out;
  }
};

inline Point pair_jump(std::size_t rank, std::size_t x, std::size_t y) {
  Point k(rank, 0);
  k[x] += 1;
  if (y < rank) k[y] -= 1;
  return k;
}

/// Power profiles without an explicit r0 are clamped at the smallest pair
/// distance of the space, where summability is checked by direct summation.
inline Profile clamp_profile(const GroundSpace& space, Profile psi) {
  if (psi.kind == Profile::Kind::power && psi.cutoff == 0.0) {
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t x = 0; x < space.rank(); ++x)
      for (std::size_t y = x + 1; y < space.rank(); ++y) dmin = std::min(dmin, space.d1(x, y));
    psi.cutoff = std::isfinite(dmin) ? dmin : 0.0;
  }
  return psi;
}

/// The pair-jump measure nu(e_x - e_y) = psi(d1(x,y))/2 over ordered pairs
/// x != y of generators. Zero rates are not stored.
inline JumpMeasure build_nu(const GroundSpace& space, Profile psi) {
  psi.validate();
  psi = clamp_profile(space, psi);
  const std::size_t r = space.rank();
  JumpMeasure nu;
  nu.rank = r;
  double total = 0.0;
  for (std::size_t x = 0; x < r; ++x)
    for (std::size_t y = x + 1; y < r; ++y) {
      const double v = psi(space.d1(x, y));
      if (!std::isfinite(v) || v < 0.0)
        throw Error(ErrorKind::validation, "build_nu: psi is not finite on the ground space");
      total += v;
      if (v > 0.0) nu.pairs.push_back({pair_jump(r, x, y), v / 2.0});
    }
  if (!std::isfinite(total))
    throw Error(ErrorKind::validation, "build_nu: summability fails (total rate overflows)");
  return nu;
}

/// Jump sizes rho(kappa, 0), one per stored pair.
inline std::vector<double> jump_sizes(const GroundSpace& space, const JumpMeasure& nu) {
  std::vector<double> out;
  out.reserve(nu.pairs.size());
  for (const auto& p : nu.pairs) out.push_back(rho_to_zero(space, p.kappa));
  return out;
}

/// Metric truncation: keeps the jumps with rho(kappa, 0) <= radius.
inline JumpMeasure truncate_nu(const GroundSpace& space, const JumpMeasure& nu, double radius) {
  require(radius > 0.0, "truncate_nu: radius must be positive");
  JumpMeasure out;
  out.rank = nu.rank;
  const auto sizes = jump_sizes(space, nu);
  for (std::size_t i = 0; i < nu.pairs.size(); ++i)
    if (sizes[i] <= radius) out.pairs.push_back(nu.pairs[i]);
  return out;
}

struct WalkStep {
  double time = 0.0;
  Point increment;
};

struct WalkSample {
  std::vector<WalkStep> path;
  VpdElement endpoint;
};

/// Draws increments from pi = nu / q with a cumulative table.
class JumpSampler {
public:
  explicit JumpSampler(const JumpMeasure& nu) : nu_(nu), q_(nu.total_rate()) {
    double acc = 0.0;
    for (const auto& p : nu.pairs) {
      acc += 2.0 * p.rate;
      cumulative_.push_back(acc);
    }
  }

  double total_rate() const { return q_; }
  std::size_t rank() const { return nu_.rank; }

  /// Index of the pair and the sign of the drawn jump.
  std::pair<std::size_t, int> draw(SampleRng& rng) const {
    std::uniform_real_distribution<double> unif(0.0, q_);
    const double u = unif(rng);
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    std::size_t i = static_cast<std::size_t>(it - cumulative_.begin());
    if (i >= cumulative_.size()) i = cumulative_.size() - 1;
    const double lo = i == 0 ? 0.0 : cumulative_[i - 1];
    const int sign = (u - lo) < nu_.pairs[i].rate ? 1 : -1;
    return {i, sign};
  }

  /// Full path of the compound Poisson walk on [0, t].
  WalkSample sample(SampleRng& rng, double t) const {
    WalkSample s;
    s.endpoint = zero_point(nu_.rank);
    if (q_ <= 0.0 || t <= 0.0) return s;
    std::poisson_distribution<long> count(q_ * t);
    const long n = count(rng);
    std::uniform_real_distribution<double> unif(0.0, t);
    std::vector<double> times(static_cast<std::size_t>(n));
    for (auto& x : times) x = unif(rng);
    std::sort(times.begin(), times.end());
    for (double tj : times) {
      const auto [i, sign] = draw(rng);
      Point inc = sign > 0 ? nu_.pairs[i].kappa : -nu_.pairs[i].kappa;
      s.endpoint = s.endpoint + inc;
      s.path.push_back({tj, std::move(inc)});
    }
    return s;
  }

  /// Endpoint only; consumes the stream exactly like sample().
  VpdElement endpoint(SampleRng& rng, double t) const {
    VpdElement g = zero_point(nu_.rank);
    if (q_ <= 0.0 || t <= 0.0) return g;
    std::poisson_distribution<long> count(q_ * t);
    const long n = count(rng);
    std::uniform_real_distribution<double> unif(0.0, t);
    for (long j = 0; j < n; ++j) unif(rng);  // jump times, unused here
    for (long j = 0; j < n; ++j) {
      const auto [i, sign] = draw(rng);
      const Point& kappa = nu_.pairs[i].kappa;
      for (std::size_t c = 0; c < g.size(); ++c) g[c] += sign * kappa[c];
    }
    return g;
  }

private:
  JumpMeasure nu_;
  double q_;
  std::vector<double> cumulative_;
};

/// One walk S_t from the stream (seed, index).
inline WalkSample sample_walk(const JumpMeasure& nu, double t, std::uint64_t seed,
                              std::uint64_t index = 0) {
  require(t >= 0.0, "sample_walk: t must be nonnegative");
  JumpSampler sampler(nu);
  auto rng = stream_for(seed, index);
  return sampler.sample(rng, t);
}

}  // namespace vpdheat
