#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "vpdheat/common.hpp"
#include "vpdheat/lattice.hpp"
#include "vpdheat/levy.hpp"
#include "vpdheat/metric.hpp"
#include "vpdheat/quadrature.hpp"
#include "vpdheat/walks.hpp"
#include "vpdheat/transport.hpp"

namespace vpdheat {

// ---------------------------------------------------------------------------
// Symbols and characters
// ---------------------------------------------------------------------------

/// Angles theta in [0, 2pi)^F; chi_theta(g) = exp(i <g, theta>).
struct Character {
  std::vector<double> angles;

  Character() = default;
  explicit Character(std::vector<double> a) : angles(std::move(a)) {
    for (auto& x : angles) {
      x = std::fmod(x, kTwoPi);
      if (x < 0.0) x += kTwoPi;
    }
  }
  std::size_t rank() const { return angles.size(); }
};

/// Finite-rank Levy–Khintchine symbol on Z^F: jumps inside F plus the
/// boundary rate of each generator (jumps to generators outside F).
struct Symbol {
  JumpMeasure active;
  std::vector<double> boundary;

  std::size_t rank() const { return active.rank; }

  /// lambda(theta) = sum_kappa nu(kappa)(1 - cos<kappa,theta>)
  ///               + sum_x b_x (1 - cos theta_x).
  double operator()(const std::vector<double>& theta) const {
    double s = 0.0;
    for (const auto& p : active.pairs) s += 2.0 * p.rate * (1.0 - std::cos(dot(p.kappa, theta)));
    for (std::size_t x = 0; x < boundary.size(); ++x)
      if (boundary[x] != 0.0) s += boundary[x] * (1.0 - std::cos(theta[x]));
    return s;
  }

  /// The jump measure whose exponent this is: boundary rate b_x becomes the
  /// symmetric pair {+e_x, -e_x} with rate b_x/2 each.
  JumpMeasure levy_measure() const {
    JumpMeasure nu = active;
    for (std::size_t x = 0; x < boundary.size(); ++x)
      if (boundary[x] > 0.0) nu.pairs.push_back({pair_jump(rank(), x, rank()), boundary[x] / 2.0});
    return nu;
  }

  double total_rate() const { return levy_measure().total_rate(); }

  /// sup lambda <= 2 (q + sum b).
  double upper_bound() const {
    double b = 0.0;
    for (double v : boundary) b += v;
    return 2.0 * (active.total_rate() + b);
  }
};

inline Symbol make_symbol(const JumpMeasure& nu) {
  return Symbol{nu, std::vector<double>(nu.rank, 0.0)};
}

/// Symbol of the sub-generator set `subset` of `space`: pair jumps inside
/// the subset, and boundary rate sum_{y not in subset} psi(d1(x,y)).
inline Symbol restrict_symbol(const GroundSpace& space, const Profile& psi,
                              const std::vector<std::size_t>& subset) {
  const Profile full = clamp_profile(space, psi);
  Symbol sym = make_symbol(build_nu(space.subspace(subset), full));
  std::vector<char> inside(space.rank(), 0);
  for (auto i : subset) inside[i] = 1;
  for (std::size_t i = 0; i < subset.size(); ++i)
    for (std::size_t y = 0; y < space.rank(); ++y)
      if (!inside[y]) sym.boundary[i] += full(space.d1(subset[i], y));
  return sym;
}

inline double symbol_eval(const Symbol& sym, const Character& theta) {
  require(theta.rank() == sym.rank(), "symbol_eval: character dimension does not match rank");
  return sym(theta.angles);
}

// ---------------------------------------------------------------------------
// Compound Poisson series route
// ---------------------------------------------------------------------------

/// Heat kernel p_t on Z^F with a certified bound on the missing mass.
struct HeatKernel {
  LatticeMap masses;
  double t = 0.0;
  double deficit = 0.0;
  std::size_t terms = 0;

  double at(const Point& g) const { return value_at(masses, g); }
  double sum() const { return total_mass(masses); }
};

struct SeriesOptions {
  std::size_t max_terms = 20000;
  std::size_t max_support = 4000000;
  std::size_t max_work = std::numeric_limits<std::size_t>::max();
  /// Entries of pi^{*n} below prune_fraction * tol / (terms) are dropped; the
  /// dropped mass is charged to the deficit.
  double prune_fraction = 1e-3;
};

/// Poisson weights e^{-m} m^n / n! for n = 0..N and a certified upper-tail
/// bound for sum_{n > N}.
class PoissonWeights {
public:
  explicit PoissonWeights(double mean) : mean_(mean) {}

  double weight(std::size_t n) const {
    if (mean_ <= 0.0) return n == 0 ? 1.0 : 0.0;
    const double dn = static_cast<double>(n);
    return std::exp(-mean_ + dn * std::log(mean_) - std::lgamma(dn + 1.0));
  }

  /// sum_{n > N} weight(n), bounded above.
  double tail_after(std::size_t N) const {
    if (mean_ <= 0.0) return 0.0;
    double s = 0.0;
    std::size_t n = N + 1;
    double w = weight(n);
    while (true) {
      s += w;
      const double ratio = mean_ / static_cast<double>(n + 1);
      if (ratio < 0.5 && w < 1e-18 * std::max(s, 1e-300)) {
        s += w * ratio / (1.0 - ratio);  // geometric bound on the rest
        break;
      }
      if (w == 0.0 && ratio < 1.0) break;
      ++n;
      w *= ratio;
      if (n > N + 100000000) break;
    }
    return s;
  }

  /// Smallest N with tail_after(N) <= tol.
  std::size_t terms_for(double tol, std::size_t max_terms) const {
    if (mean_ <= 0.0) return 0;
    // Start near the mean and walk upward; the tail is decreasing in N.
    std::size_t N = static_cast<std::size_t>(std::max(0.0, mean_ - 10.0 * std::sqrt(mean_)));
    while (tail_after(N) > tol) {
      const std::size_t step = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(mean_) / 4));
      N += step;
      if (N > max_terms)
        throw Error(ErrorKind::budget, "heat_series: tolerance needs more than " +
                                           std::to_string(max_terms) + " Poisson terms");
    }
    while (N > 0 && tail_after(N - 1) <= tol) --N;
    return N;
  }

private:
  double mean_;
};

/// Successive convolution powers pi^{*n} of the jump distribution pi = nu/q.
/// Each value is gathered pair by pair as pi_p (f(h - k_p) + f(h + k_p)), so
/// a symmetric input yields an exactly symmetric output.
///
/// Points are packed into 64-bit keys with 64/rank bits per coordinate
/// (offset binary), so a jump is a single integer addition.
class ConvolutionPowers {
public:
  using Key = std::uint64_t;
  struct KeyHash {
    std::size_t operator()(Key k) const noexcept { return static_cast<std::size_t>(mix64(k)); }
  };
  using PackedMap = std::unordered_map<Key, double, KeyHash>;

  ConvolutionPowers(const JumpMeasure& nu, double prune_floor, std::size_t max_support,
                    std::size_t max_work = std::numeric_limits<std::size_t>::max())
      : rank_(nu.rank), floor_(prune_floor), max_support_(max_support), max_work_(max_work) {
    bits_ = rank_ == 0 ? 32 : std::min<std::size_t>(32, 64 / rank_);
    const double q = nu.total_rate();
    for (const auto& p : nu.pairs) {
      Key delta = 0;
      for (std::size_t d = 0; d < rank_; ++d) {
        delta += static_cast<Key>(static_cast<std::int64_t>(p.kappa[d])) << (bits_ * d);
        step_ = std::max(step_, std::abs(p.kappa[d]));
      }
      deltas_.push_back(delta);
      probs_.push_back(q > 0.0 ? p.rate / q : 0.0);
    }
    origin_ = encode(zero_point(rank_));
    current_[origin_] = 1.0;
  }

  std::size_t power() const { return n_; }
  /// Lattice updates so far: support size times jump count, summed over steps.
  std::size_t work() const { return work_; }
  /// Sum of the stored entries of the current power (1 minus pruned mass).
  double mass() const { return mass_; }
  const PackedMap& packed() const { return current_; }
  double at_origin() const { return lookup(current_, origin_); }

  Key encode(const Point& g) const {
    Key k = 0;
    for (std::size_t d = 0; d < rank_; ++d) k += static_cast<Key>(g[d] + offset()) << (bits_ * d);
    return k;
  }
  Point decode(Key k) const {
    Point g(rank_);
    const Key mask = (Key{1} << bits_) - 1;
    for (std::size_t d = 0; d < rank_; ++d)
      g[d] = static_cast<int>(static_cast<std::int64_t>((k >> (bits_ * d)) & mask) - offset());
    return g;
  }
  LatticeMap unpack(const PackedMap& m) const {
    LatticeMap out;
    out.reserve(m.size());
    for (const auto& [k, v] : m) out.emplace(decode(k), v);
    return out;
  }

  void advance() {
    // Coordinates after n steps lie within n * step of 0.
    if (static_cast<std::int64_t>(n_ + 1) * step_ >= offset())
      throw Error(ErrorKind::budget, "heat_series: coordinates exceed the packed lattice range");
    work_ += current_.size() * std::max<std::size_t>(1, deltas_.size());
    if (work_ > max_work_)
      throw Error(ErrorKind::budget, "heat_series: work exceeds " + std::to_string(max_work_) + " lattice updates");
    PackedMap next;
    next.reserve(current_.size() * 2 + 16);
    for (const auto& [h, _] : current_)
      for (Key k : deltas_) {
        next.try_emplace(h + k, 0.0);
        next.try_emplace(h - k, 0.0);
      }
    double total = 0.0;
    for (auto it = next.begin(); it != next.end();) {
      double v = 0.0;
      for (std::size_t p = 0; p < deltas_.size(); ++p)
        v += probs_[p] * (lookup(current_, it->first - deltas_[p]) + lookup(current_, it->first + deltas_[p]));
      if (v < floor_) {
        it = next.erase(it);
      } else {
        it->second = v;
        total += v;
        ++it;
      }
    }
    if (next.size() > max_support_)
      throw Error(ErrorKind::budget, "heat_series: kernel support exceeds " +
                                         std::to_string(max_support_) + " lattice points");
    current_ = std::move(next);
    mass_ = total;
    ++n_;
  }

private:
  static double lookup(const PackedMap& m, Key k) {
    const auto it = m.find(k);
    return it == m.end() ? 0.0 : it->second;
  }
  std::int64_t offset() const { return std::int64_t{1} << (bits_ - 1); }

  std::size_t rank_;
  std::size_t bits_ = 32;
  double floor_;
  std::size_t max_support_;
  std::size_t max_work_;
  std::size_t work_ = 0;
  int step_ = 0;
  std::vector<Key> deltas_;
  std::vector<double> probs_;
  Key origin_ = 0;
  PackedMap current_;
  double mass_ = 1.0;
  std::size_t n_ = 0;
};

/// Heat kernels at several times from one pass over the convolution powers:
/// p_t = sum_n e^{-qt}(qt)^n/n! pi^{*n}, truncated where the Poisson tail
/// drops below tol/2.
inline std::vector<HeatKernel> heat_series_multi(const JumpMeasure& nu, const std::vector<double>& times,
                                                 double tol, const SeriesOptions& opt = {}) {
  require(tol > 0.0 && tol < 1.0, "heat_series: tol must lie in (0, 1)");
  const double q = nu.total_rate();
  std::vector<HeatKernel> out(times.size());
  std::vector<std::size_t> terms(times.size(), 0);
  std::vector<double> tails(times.size(), 0.0);
  std::size_t n_max = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    require(times[i] >= 0.0, "heat_series: t must be nonnegative");
    out[i].t = times[i];
    const PoissonWeights pw(q * times[i]);
    terms[i] = pw.terms_for(tol / 2.0, opt.max_terms);
    tails[i] = pw.tail_after(terms[i]);
    n_max = std::max(n_max, terms[i]);
  }
  const double floor = opt.prune_fraction * tol / static_cast<double>(n_max + 1);
  ConvolutionPowers powers(nu, floor, opt.max_support, opt.max_work);
  std::vector<ConvolutionPowers::PackedMap> acc(times.size());
  std::vector<double> deficits = tails;
  for (std::size_t n = 0; n <= n_max; ++n) {
    if (n > 0) powers.advance();
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (n > terms[i]) continue;
      const double w = PoissonWeights(q * times[i]).weight(n);
      if (w == 0.0) continue;
      for (const auto& [h, v] : powers.packed()) acc[i][h] += w * v;
      deficits[i] += w * std::max(0.0, 1.0 - powers.mass());
    }
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    out[i].masses = powers.unpack(acc[i]);
    out[i].terms = terms[i] + 1;
    // Round-off in the accumulated sums is charged to the deficit as well.
    out[i].deficit = deficits[i] + 1e-15 * static_cast<double>(terms[i] + 1);
    if (times[i] == 0.0 || q == 0.0) out[i].deficit = 0.0;
  }
  return out;
}

inline HeatKernel heat_series(const JumpMeasure& nu, double t, double tol,
                              const SeriesOptions& opt = {}) {
  return heat_series_multi(nu, {t}, tol, opt).front();
}

/// a_n = pi^{*n}(0) for n = 0..N, so that p_t(0) = sum_n w_n(t) a_n for every t.
struct ReturnSequence {
  double q = 0.0;
  std::vector<double> a;
  std::vector<double> pruned;  // 1 - mass of pi^{*n}

  /// p_t(0) and a bound on the truncation/pruning error.
  std::pair<double, double> at(double t) const {
    const PoissonWeights pw(q * t);
    double v = 0.0, err = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) {
      const double w = pw.weight(n);
      v += w * a[n];
      err += w * pruned[n];
    }
    err += pw.tail_after(a.empty() ? 0 : a.size() - 1);
    return {v, err};
  }
};

inline ReturnSequence return_sequence(const JumpMeasure& nu, double t_max, double tol,
                                      const SeriesOptions& opt = {}) {
  ReturnSequence seq;
  seq.q = nu.total_rate();
  const std::size_t N = PoissonWeights(seq.q * t_max).terms_for(tol / 2.0, opt.max_terms);
  ConvolutionPowers powers(nu, opt.prune_fraction * tol / static_cast<double>(N + 1),
                           opt.max_support, opt.max_work);
  for (std::size_t n = 0; n <= N; ++n) {
    if (n > 0) powers.advance();
    seq.a.push_back(powers.at_origin());
    seq.pruned.push_back(std::max(0.0, 1.0 - powers.mass()));
  }
  return seq;
}

// ---------------------------------------------------------------------------
// Lattice helpers
// ---------------------------------------------------------------------------

inline LatticeMap convolve(const LatticeMap& a, const LatticeMap& b) {
  LatticeMap out;
  for (const auto& [x, u] : a)
    for (const auto& [y, v] : b) out[x + y] += u * v;
  return out;
}

/// Pushes a kernel on Z^F forward to the listed coordinates.
inline LatticeMap marginalize(const LatticeMap& f, const std::vector<std::size_t>& coords) {
  LatticeMap out;
  for (const auto& [h, v] : f) {
    Point p(coords.size());
    for (std::size_t i = 0; i < coords.size(); ++i) p[i] = h[coords[i]];
    out[p] += v;
  }
  return out;
}

inline double sum_of_squares(const LatticeMap& f) {
  double s = 0.0;
  for (const auto& [_, v] : f) s += v * v;
  return s;
}

/// Generator identity: -d/dt p_t(0) = sum_kappa nu(kappa)(p_t(0) - p_t(kappa)).
inline double energy_from_kernel(const HeatKernel& k, const JumpMeasure& nu) {
  const double p0 = k.at(zero_point(nu.rank));
  double e = 0.0;
  for (const auto& p : nu.pairs) e += p.rate * ((p0 - k.at(p.kappa)) + (p0 - k.at(-p.kappa)));
  return e;
}

// ---------------------------------------------------------------------------
// Fourier route
// ---------------------------------------------------------------------------

struct SpectralValue {
  double value = 0.0;
  double error = 0.0;   // grid doubling change or Monte Carlo standard error
  bool monte_carlo = false;
};

/// p_t(g) = integral of cos<g,theta> exp(-t lambda(theta)) over the torus.
inline SpectralValue heat_fourier(const Symbol& sym, const Point& g, double t,
                                  const QuadratureSpec& quad) {
  require(g.size() == sym.rank(), "heat_fourier: lattice point rank does not match the symbol");
  const auto r = integrate_torus(sym.rank(), quad, 1, [&](const std::vector<double>& th, double* o) {
    o[0] = std::cos(dot(g, th)) * std::exp(-t * sym(th));
  }, 2 * static_cast<std::size_t>(linf_norm(g)) + 4);
  return {r.values[0], r.errors[0], r.monte_carlo};
}

// ---------------------------------------------------------------------------
// Invariants
// ---------------------------------------------------------------------------

/// Kernel side of the cross-check: the compound Poisson series (exact up to
/// a certified deficit, feasible at small rank) or sampled walks.
enum class KernelRoute { automatic, series, walks };

struct InvariantOptions {
  KernelRoute kernel_route = KernelRoute::automatic;  // series up to the grid rank limit
  std::size_t walk_samples = 1000000;
  std::uint64_t walk_seed = 1;
  double walk_tail_tol = 1e-6;
  std::size_t auto_series_work = 10000000;  // lattice updates before falling back to walks
  double series_tol = 1e-12;
  double grid_cross_tol = 1e-8;
  double resolvent_cross_tol = 1e-6;  // time integration route
  double mc_sigmas = 3.0;
  std::size_t gl_order = 16;
  SeriesOptions series;
};

struct InvariantRow {
  double t = 0.0;
  // spectral route
  double ret = 0.0, collision = 0.0, energy = 0.0, scale = 0.0;
  // kernel route
  double ret_kernel = 0.0, collision_kernel = 0.0, energy_kernel = 0.0;
  double deficit = 0.0;
  double discrepancy = 0.0;
  double tolerance = 0.0;
  bool ok() const { return discrepancy <= tolerance; }
};

struct ResolventRow {
  double s = 0.0;
  double spectral = 0.0;
  double time_integral = 0.0;
  double discrepancy = 0.0;
  double tolerance = 0.0;
  bool ok() const { return discrepancy <= tolerance; }
};

struct InvariantReport {
  std::vector<InvariantRow> rows;
  std::vector<ResolventRow> resolvent;
  std::string quadrature;
  std::string kernel_route;     // heat rows: series or walks
  std::string resolvent_route;  // series (time integral) or walks

  double max_discrepancy() const {
    double m = 0.0;
    for (const auto& r : rows) m = std::max(m, r.discrepancy);
    for (const auto& r : resolvent) m = std::max(m, r.discrepancy);
    return m;
  }
  bool ok() const {
    for (const auto& r : rows)
      if (!r.ok()) return false;
    for (const auto& r : resolvent)
      if (!r.ok()) return false;
    return true;
  }
};

/// Spectral integrals of the four invariants plus the spectral scale.
/// Components per t: return, collision, energy; per s: resolvent.
inline QuadResult spectral_invariants(const Symbol& sym, const std::vector<double>& t_grid,
                                      const std::vector<double>& s_grid, const QuadratureSpec& quad) {
  const std::size_t nt = t_grid.size(), ns = s_grid.size();
  return integrate_torus(sym.rank(), quad, 3 * nt + ns, [&](const std::vector<double>& th, double* o) {
    const double lam = sym(th);
    for (std::size_t i = 0; i < nt; ++i) {
      const double e = std::exp(-t_grid[i] * lam);
      o[3 * i] = e;
      o[3 * i + 1] = e * e;
      o[3 * i + 2] = lam * e;
    }
    for (std::size_t j = 0; j < ns; ++j) o[3 * nt + j] = 1.0 / (s_grid[j] + lam);
  });
}

/// G_s(0,0) by numeric time integration of e^{-st} p_t(0), with p_t(0) from
/// the compound Poisson series. Returns (value, error bound).
inline std::pair<double, double> resolvent_by_time_integration(const ReturnSequence& seq, double s,
                                                               double t_end, std::size_t gl_order) {
  std::vector<double> x, w;
  gauss_legendre(gl_order, x, w);
  const double panel = std::min(1.0, 2.0 / (seq.q + s + 1e-300));
  const std::size_t panels = static_cast<std::size_t>(std::ceil(t_end / panel));
  const double h = t_end / static_cast<double>(panels);
  double v = 0.0, err = 0.0;
  for (std::size_t k = 0; k < panels; ++k) {
    const double a = h * static_cast<double>(k);
    for (std::size_t i = 0; i < gl_order; ++i) {
      const double t = a + 0.5 * h * (x[i] + 1.0);
      const auto [p0, e0] = seq.at(t);
      const double weight = 0.5 * h * w[i] * std::exp(-s * t);
      v += weight * p0;
      err += weight * e0;
    }
  }
  err += std::exp(-s * t_end) / s;  // p_t(0) <= 1 beyond t_end
  return {v, err};
}

/// Horizon T with e^{-sT}/s <= tol.
inline double resolvent_horizon(double s, double tol) {
  return std::max(1.0, std::log(1.0 / (s * tol)) / s);
}

namespace detail {

// Spectral-route fields of one row.
inline InvariantRow spectral_row(const QuadResult& spec, std::size_t i, double t) {
  InvariantRow row;
  row.t = t;
  row.ret = spec.values[3 * i];
  row.collision = spec.values[3 * i + 1];
  row.energy = spec.values[3 * i + 2];
  row.scale = row.ret > 0.0 ? row.energy / row.ret : 0.0;
  return row;
}

inline double row_discrepancy(const InvariantRow& r) {
  return std::max({std::abs(r.ret - r.ret_kernel), std::abs(r.collision - r.collision_kernel),
                   std::abs(r.energy - r.energy_kernel)});
}

// Statistical error of the spectral side (0 for grid quadrature).
inline double spectral_se(const QuadResult& spec, std::size_t k) {
  return spec.monte_carlo ? spec.errors[k] : 0.0;
}

inline double hypot_se(double a, double b) { return std::sqrt(a * a + b * b); }

inline std::vector<InvariantRow> series_rows(const JumpMeasure& nu, const QuadResult& spec,
                                             const std::vector<double>& t_grid, const InvariantOptions& opt,
                                             const SeriesOptions& series) {
  std::vector<InvariantRow> rows;
  const auto kernels = heat_series_multi(nu, t_grid, opt.series_tol, series);
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    InvariantRow row = spectral_row(spec, i, t_grid[i]);
    const HeatKernel& k = kernels[i];
    row.ret_kernel = k.at(zero_point(nu.rank));
    row.collision_kernel = sum_of_squares(k.masses);
    row.energy_kernel = energy_from_kernel(k, nu);
    row.deficit = k.deficit;
    row.discrepancy = row_discrepancy(row);
    if (spec.monte_carlo) {
      const double se = std::max({spectral_se(spec, 3 * i), spectral_se(spec, 3 * i + 1),
                                  spectral_se(spec, 3 * i + 2)});
      row.tolerance = opt.mc_sigmas * se + (2.0 + 2.0 * nu.total_rate()) * k.deficit;
    } else {
      row.tolerance = opt.grid_cross_tol;
    }
    rows.push_back(row);
  }
  return rows;
}

inline std::vector<ResolventRow> series_resolvent(const JumpMeasure& nu, const QuadResult& spec,
                                                  std::size_t nt, const std::vector<double>& s_grid,
                                                  const InvariantOptions& opt, const SeriesOptions& series) {
  std::vector<ResolventRow> rows;
  const double tail_tol = opt.series_tol * 1e-2;
  double horizon = 0.0;
  for (double s : s_grid) horizon = std::max(horizon, resolvent_horizon(s, tail_tol));
  const ReturnSequence seq = return_sequence(nu, horizon, opt.series_tol, series);
  for (std::size_t j = 0; j < s_grid.size(); ++j) {
    ResolventRow row;
    row.s = s_grid[j];
    row.spectral = spec.values[3 * nt + j];
    const auto [v, err] =
        resolvent_by_time_integration(seq, row.s, resolvent_horizon(row.s, tail_tol), opt.gl_order);
    row.time_integral = v;
    row.discrepancy = std::abs(row.spectral - v);
    row.tolerance = spec.monte_carlo ? opt.mc_sigmas * spec.errors[3 * nt + j] + err
                                     : std::max(opt.resolvent_cross_tol, err);
    rows.push_back(row);
  }
  return rows;
}

inline std::vector<InvariantRow> walk_rows(const WalkInvariants& walks, const QuadResult& spec,
                                           const std::vector<double>& t_grid, const InvariantOptions& opt) {
  std::vector<InvariantRow> rows;
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    InvariantRow row = spectral_row(spec, i, t_grid[i]);
    const WalkInvariantRow& w = walks.rows[i];
    row.ret_kernel = w.ret.mean;
    row.collision_kernel = w.collision.mean;
    row.energy_kernel = w.energy.mean;
    row.discrepancy = row_discrepancy(row);
    const double se = std::max({hypot_se(spectral_se(spec, 3 * i), w.ret.std_error),
                                hypot_se(spectral_se(spec, 3 * i + 1), w.collision.std_error),
                                hypot_se(spectral_se(spec, 3 * i + 2), w.energy.std_error)});
    row.tolerance = opt.mc_sigmas * se + (spec.monte_carlo ? 0.0 : opt.grid_cross_tol);
    rows.push_back(row);
  }
  return rows;
}

inline std::vector<ResolventRow> walk_resolvent(const WalkInvariants& walks, const QuadResult& spec,
                                                std::size_t nt, const std::vector<double>& s_grid,
                                                const InvariantOptions& opt) {
  std::vector<ResolventRow> rows;
  for (std::size_t j = 0; j < s_grid.size(); ++j) {
    ResolventRow row;
    const WalkResolventRow& w = walks.resolvent[j];
    row.s = s_grid[j];
    row.spectral = spec.values[3 * nt + j];
    row.time_integral = w.value.mean;
    row.discrepancy = std::abs(row.spectral - row.time_integral);
    row.tolerance = opt.mc_sigmas * hypot_se(spectral_se(spec, 3 * nt + j), w.value.std_error) + w.bias +
                    (spec.monte_carlo ? 0.0 : opt.grid_cross_tol);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace detail

/// Both routes for every invariant on the given grids. The kernel side is
/// the compound Poisson series (heat rows) and its time integral (resolvent),
/// or walk estimates. In automatic mode the series is tried up to the grid
/// rank limit within opt.auto_series_work lattice updates, separately for the
/// heat rows and the resolvent; over budget, that side uses walks.
inline InvariantReport invariants(const Symbol& sym, const std::vector<double>& t_grid,
                                  const std::vector<double>& s_grid, const QuadratureSpec& quad,
                                  const InvariantOptions& opt = {}) {
  require(!t_grid.empty() || !s_grid.empty(), "invariants: grids are empty");
  for (double t : t_grid) require(t >= 0.0, "invariants: t must be nonnegative");
  for (double s : s_grid) require(s > 0.0, "invariants: s must be positive");
  const JumpMeasure nu = sym.levy_measure();
  const bool automatic = opt.kernel_route == KernelRoute::automatic;
  const bool try_series = automatic ? sym.rank() <= QuadratureSpec{}.max_grid_rank
                                    : opt.kernel_route == KernelRoute::series;
  SeriesOptions series = opt.series;
  if (automatic) series.max_work = std::min(series.max_work, opt.auto_series_work);

  InvariantReport rep;
  rep.quadrature = quad.describe();
  const QuadResult spec = spectral_invariants(sym, t_grid, s_grid, quad);
  const std::size_t nt = t_grid.size();

  // Runs the series side; in automatic mode a budget overrun means walks.
  auto attempt = [&](auto&& run) {
    if (!try_series) return false;
    try {
      run();
      return true;
    } catch (const Error& e) {
      if (!automatic || e.kind() != ErrorKind::budget) throw;
      return false;
    }
  };
  const bool heat_series_ok =
      !t_grid.empty() && attempt([&] { rep.rows = detail::series_rows(nu, spec, t_grid, opt, series); });
  const bool resolvent_series_ok =
      !s_grid.empty() &&
      attempt([&] { rep.resolvent = detail::series_resolvent(nu, spec, nt, s_grid, opt, series); });

  const std::vector<double> walk_t = heat_series_ok ? std::vector<double>{} : t_grid;
  const std::vector<double> walk_s = resolvent_series_ok ? std::vector<double>{} : s_grid;
  if (!walk_t.empty() || !walk_s.empty()) {
    const WalkInvariants walks =
        simulate_invariants(nu, walk_t, walk_s, opt.walk_samples, opt.walk_seed, opt.walk_tail_tol);
    if (!walk_t.empty()) rep.rows = detail::walk_rows(walks, spec, t_grid, opt);
    if (!walk_s.empty()) rep.resolvent = detail::walk_resolvent(walks, spec, nt, s_grid, opt);
  }
  rep.kernel_route = t_grid.empty() ? "" : heat_series_ok ? "series" : "walks";
  rep.resolvent_route = s_grid.empty() ? "" : resolvent_series_ok ? "series" : "walks";
  return rep;
}

// ---------------------------------------------------------------------------
// RKHS norms and Dirichlet energy
// ---------------------------------------------------------------------------

/// |f^(theta)|^2 for the trigonometric polynomial f^ = sum_g f(g) e^{-i<g,theta>}.
inline double fourier_power(const LatticeMap& f, const std::vector<double>& theta) {
  std::complex<double> z{0.0, 0.0};
  for (const auto& [g, v] : f) {
    const double a = dot(g, theta);
    z += v * std::complex<double>(std::cos(a), -std::sin(a));
  }
  return std::norm(z);
}

inline std::size_t trig_degree(const LatticeMap& f) {
  int d = 0;
  for (const auto& [g, _] : f) d = std::max(d, linf_norm(g));
  return static_cast<std::size_t>(d);
}

/// Grid size that integrates |f^|^2 times a smooth weight without aliasing.
inline std::size_t nodes_for(const LatticeMap& f) { return 4 * trig_degree(f) + 8; }

/// ||f||_{H_t} = (integral |f^|^2 e^{t lambda})^{1/2}.
inline double rkhs_norm(const Symbol& sym, const LatticeMap& f, double t, const QuadratureSpec& quad) {
  if (f.empty()) return 0.0;
  const auto r = integrate_torus(sym.rank(), quad, 1, [&](const std::vector<double>& th, double* o) {
    o[0] = fourier_power(f, th) * std::exp(t * sym(th));
  }, nodes_for(f));
  return std::sqrt(std::max(0.0, r.values[0]));
}

/// Dirichlet energy E(f,f) = integral lambda |f^|^2.
inline double dirichlet_energy(const Symbol& sym, const LatticeMap& f, const QuadratureSpec& quad) {
  if (f.empty()) return 0.0;
  const auto r = integrate_torus(sym.rank(), quad, 1, [&](const std::vector<double>& th, double* o) {
    o[0] = fourier_power(f, th) * sym(th);
  }, nodes_for(f));
  return std::max(0.0, r.values[0]);
}

/// Lattice form of the same energy: 1/2 sum_h sum_kappa nu(kappa)(f(h+kappa) - f(h))^2.
inline double dirichlet_energy_lattice(const JumpMeasure& nu, const LatticeMap& f) {
  LatticeMap support = f;
  for (const auto& [h, _] : f)
    for (const auto& p : nu.pairs) {
      support.try_emplace(h + p.kappa, 0.0);
      support.try_emplace(h - p.kappa, 0.0);
    }
  double e = 0.0;
  for (const auto& [h, fh] : support)
    for (const auto& p : nu.pairs) {
      const double a = value_at(f, h + p.kappa) - fh;
      const double b = value_at(f, h - p.kappa) - fh;
      e += p.rate * (a * a + b * b);
    }
  return 0.5 * e;
}

// ---------------------------------------------------------------------------
// Characters and Lipschitz data
// ---------------------------------------------------------------------------

/// Geodesic distance on R / 2piZ, in [0, pi].
inline double circle_distance(double a, double b) {
  double d = std::fmod(std::abs(a - b), kTwoPi);
  return d > kPi ? kTwoPi - d : d;
}

struct CharLipschitz {
  double phase_lip = 0.0;
  double lower = 0.0;  // (2/pi) phase_lip
  double upper = 0.0;  // phase_lip
};

/// Lipschitz constant of the phase map x -> theta_x ([A] -> 0) with respect
/// to d1 on F ∪ {[A]}, and the induced bracket for Lip_rho(chi_theta).
inline CharLipschitz char_lipschitz(const GroundSpace& space, const Character& theta) {
  require(theta.rank() == space.rank(), "char_lipschitz: character dimension does not match rank");
  const std::size_t base = space.rank();
  auto phase = [&](std::size_t u) { return u == base ? 0.0 : theta.angles[u]; };
  CharLipschitz out;
  for (std::size_t u = 0; u <= base; ++u)
    for (std::size_t v = u + 1; v <= base; ++v)
      out.phase_lip = std::max(out.phase_lip, circle_distance(phase(u), phase(v)) / space.distance(u, v));
  out.upper = out.phase_lip;
  out.lower = 2.0 / kPi * out.phase_lip;
  return out;
}

/// |chi_theta(g) - 1|.
inline double character_gap(const Character& theta, const Point& g) {
  return std::abs(std::complex<double>(std::cos(dot(g, theta.angles)) - 1.0, std::sin(dot(g, theta.angles))));
}

}  // namespace vpdheat
