#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "vpdheat/diagram.hpp"
#include "vpdheat/montecarlo.hpp"
#include "vpdheat/spectral.hpp"
#include "vpdheat/transport.hpp"

namespace vpdheat {

struct Witness {
  std::string input;
  double ratio = 0.0;
};

/// A functional inequality evaluated numerically: the bound, what the
/// witnesses achieved, and margin = bound - max achieved.
struct BoundReport {
  std::string name;
  double bound_value = 0.0;
  std::vector<Witness> witnesses;
  double max_achieved = 0.0;
  double margin = 0.0;
  double tol = 1e-9;
  bool passed = false;
  std::map<std::string, double> details;

  void finish() {
    max_achieved = 0.0;
    for (const auto& w : witnesses) max_achieved = std::max(max_achieved, w.ratio);
    margin = bound_value - max_achieved;
    passed = margin >= -tol;
  }
};

inline std::string point_string(const Point& p) {
  std::string s = "(";
  for (std::size_t i = 0; i < p.size(); ++i) s += (i ? "," : "") + std::to_string(p[i]);
  return s + ")";
}

/// Heat energy -p_t'(0) as the spectral integral of lambda e^{-t lambda}.
inline double heat_energy(const Symbol& sym, double t, const QuadratureSpec& quad) {
  const auto r = integrate_torus(sym.rank(), quad, 1, [&](const std::vector<double>& th, double* o) {
    const double lam = sym(th);
    o[0] = lam * std::exp(-t * lam);
  });
  return r.values[0];
}

/// Resolvent G_s(0,0) as the spectral integral of 1/(s + lambda).
inline double resolvent_diagonal(const Symbol& sym, double s, const QuadratureSpec& quad) {
  require(s > 0.0, "resolvent: s must be positive");
  const auto r = integrate_torus(sym.rank(), quad, 1, [&](const std::vector<double>& th, double* o) {
    o[0] = 1.0 / (s + sym(th));
  });
  return r.values[0];
}

/// Lipschitz test points: the nonzero support of f plus random sums of one
/// to three jumps.
inline std::vector<Point> lipschitz_witnesses(const JumpMeasure& nu, const LatticeMap& f,
                                              std::size_t random_count, std::uint64_t seed) {
  std::map<Point, int> seen;
  std::vector<Point> out;
  auto add = [&](const Point& g) {
    if (!is_zero(g) && seen.emplace(g, 0).second) out.push_back(g);
  };
  std::vector<Point> support;
  for (const auto& [g, _] : f) support.push_back(g);
  std::sort(support.begin(), support.end());
  for (const auto& g : support) add(g);
  if (!nu.empty()) {
    const JumpSampler sampler(nu);
    for (std::size_t i = 0; i < random_count; ++i) {
      auto rng = stream_for(seed, i);
      const int len = 1 + static_cast<int>(rng() % 3);
      Point g = zero_point(nu.rank);
      for (int j = 0; j < len; ++j) {
        const auto [k, sign] = sampler.draw(rng);
        g = sign > 0 ? g + nu.pairs[k].kappa : g - nu.pairs[k].kappa;
      }
      add(g);
    }
  }
  return out;
}

/// |f(g) - f(0)| <= norm * energy^{1/2} * rho(g, 0), with the RKHS norm and
/// the heat energy supplied by the caller.
inline BoundReport lipschitz_report(const GroundSpace& space, const LatticeMap& f, double norm,
                                    double energy, const std::vector<Point>& gammas, double tol = 1e-9) {
  BoundReport rep;
  rep.name = "lipschitz";
  rep.tol = tol;
  rep.bound_value = norm * std::sqrt(std::max(0.0, energy));
  rep.details = {{"rkhs_norm", norm}, {"energy", energy}};
  const double f0 = value_at(f, zero_point(space.rank()));
  rep.witnesses.resize(gammas.size());
  parallel_blocks(gammas.size(), [&](std::size_t i) {
    const double r = rho_to_zero(space, gammas[i]);
    const double diff = std::abs(value_at(f, gammas[i]) - f0);
    rep.witnesses[i] = {point_string(gammas[i]), r > 0.0 ? diff / r : 0.0};
  });
  rep.finish();
  return rep;
}

/// |f(g) - f(0)| <= ||f||_{H_t} (-p_t'(0))^{1/2} rho(g, 0).
inline BoundReport lipschitz_bound(const GroundSpace& space, const Symbol& sym, const LatticeMap& f,
                                   double t, const std::vector<Point>& gammas,
                                   const QuadratureSpec& quad, double tol = 1e-9) {
  require(t >= 0.0, "lipschitz_bound: t must be nonnegative");
  require(space.rank() == sym.rank(), "lipschitz_bound: rank mismatch");
  BoundReport rep = lipschitz_report(space, f, rkhs_norm(sym, f, t, quad), heat_energy(sym, t, quad),
                                     gammas, tol);
  rep.details["t"] = t;
  return rep;
}

/// Resolvent section R_s delta_0 = integral e^{-st} p_t dt on the ball
/// ||h||_inf <= radius. The coefficients of pi^{*n} are
/// c_n = integral_0^T e^{-st} e^{-qt}(qt)^n/n! dt by composite Gauss–Legendre,
/// with T chosen so that the time tail is below tol.
inline LatticeMap resolvent_section(const JumpMeasure& nu, double s, int radius, double tol = 1e-12,
                                    std::size_t gl_order = 16) {
  require(s > 0.0, "resolvent_section: s must be positive");
  require(radius >= 0, "resolvent_section: radius must be nonnegative");
  const double q = nu.total_rate();
  const double horizon = resolvent_horizon(s, tol);
  const std::size_t N = q > 0.0 ? PoissonWeights(q * horizon).terms_for(tol, SeriesOptions{}.max_terms) : 0;

  std::vector<double> x, w;
  gauss_legendre(gl_order, x, w);
  const double panel = std::min(1.0, 2.0 / (q + s));
  const std::size_t panels = static_cast<std::size_t>(std::ceil(horizon / panel));
  const double h = horizon / static_cast<double>(panels);
  std::vector<double> c(N + 1, 0.0);
  for (std::size_t k = 0; k < panels; ++k)
    for (std::size_t i = 0; i < gl_order; ++i) {
      const double t = h * (static_cast<double>(k) + 0.5 * (x[i] + 1.0));
      const double weight = 0.5 * h * w[i] * std::exp(-s * t);
      const PoissonWeights pw(q * t);
      for (std::size_t n = 0; n <= N; ++n) c[n] += weight * pw.weight(n);
    }

  ConvolutionPowers powers(nu, 0.0, SeriesOptions{}.max_support);
  ConvolutionPowers::PackedMap acc;
  for (std::size_t n = 0; n <= N; ++n) {
    if (n > 0) powers.advance();
    for (const auto& [g, v] : powers.packed()) acc[g] += c[n] * v;
  }
  LatticeMap out;
  for (auto& [g, v] : powers.unpack(acc))
    if (linf_norm(g) <= radius) out.emplace(g, v);
  return out;
}

/// ||f||_inf^2 <= G_s(0,0) (s ||f||_2^2 + E(f,f)) with G_s(0,0) supplied by
/// the caller and E in its exact lattice form.
inline BoundReport sobolev_report(const JumpMeasure& nu, const LatticeMap& f, double s, double green,
                                  double tol = 1e-9) {
  require(s > 0.0, "sobolev_bound: s must be positive");
  BoundReport rep;
  rep.name = "sobolev";
  rep.tol = tol;
  rep.bound_value = green;
  double sup = 0.0;
  for (const auto& [_, v] : f) sup = std::max(sup, std::abs(v));
  const double l2 = sum_of_squares(f);
  const double energy = dirichlet_energy_lattice(nu, f);
  const double denom = s * l2 + energy;
  rep.details = {{"s", s}, {"sup_sq", sup * sup}, {"l2_sq", l2}, {"energy", energy},
                 {"rhs", rep.bound_value * denom}};
  rep.witnesses.push_back({"f", denom > 0.0 ? sup * sup / denom : 0.0});
  rep.finish();
  return rep;
}

/// sobolev_report with G_s(0,0) by quadrature.
inline BoundReport sobolev_bound(const Symbol& sym, const LatticeMap& f, double s,
                                 const QuadratureSpec& quad, double tol = 1e-9) {
  require(s > 0.0, "sobolev_bound: s must be positive");
  return sobolev_report(sym.levy_measure(), f, s, resolvent_diagonal(sym, s, quad), tol);
}

/// Sobolev report for the truncated resolvent section; details["optimality"]
/// is the achieved ratio over G_s(0,0).
inline BoundReport sobolev_extremizer(const Symbol& sym, double s, int radius,
                                      const QuadratureSpec& quad, double tol = 1e-9) {
  const LatticeMap f = resolvent_section(sym.levy_measure(), s, radius);
  BoundReport rep = sobolev_bound(sym, f, s, quad, tol);
  rep.name = "sobolev_extremizer";
  rep.witnesses.front().input = "resolvent_section(radius=" + std::to_string(radius) + ")";
  rep.details["radius"] = radius;
  rep.details["optimality"] = rep.bound_value > 0.0 ? rep.max_achieved / rep.bound_value : 0.0;
  return rep;
}

/// t nu{M > R} + (t/R) sum_{M <= R} M nu, over jumps of both signs.
inline double mass_tail_value(const GroundSpace& space, const JumpMeasure& nu, double t, double radius) {
  double big = 0.0, small = 0.0;
  for (const auto& p : nu.pairs) {
    const double m = mass(space, p.kappa);  // same for -kappa
    if (m > radius)
      big += 2.0 * p.rate;
    else
      small += 2.0 * p.rate * m;
  }
  return t * big + t / radius * small;
}

/// P(M(X_t) > R) <= mass_tail_value. The witness is the upper end of the
/// Monte Carlo 3-sigma band, which must sit below the bound. The rho
/// version P(rho(X_t,0) > R) is reported alongside.
inline BoundReport mass_tail_bound(const GroundSpace& space, const JumpMeasure& nu, double t,
                                   double radius, std::size_t n, std::uint64_t seed,
                                   double sigmas = 3.0, double tol = 1e-12) {
  require(t >= 0.0 && radius > 0.0, "mass_tail_bound: need t >= 0 and R > 0");
  BoundReport rep;
  rep.name = "mass_tail";
  rep.tol = tol;
  rep.bound_value = mass_tail_value(space, nu, t, radius);
  const EstimatorResult est = sample_mass_tail(space, nu, t, radius, n, seed, 0.0);
  rep.witnesses.push_back({"mass", est.estimate + sigmas * est.std_error});

  const JumpSampler sampler(nu);
  const std::size_t hits = detail::count_hits(n, [&](std::size_t i) {
    auto rng = stream_for(seed, i);
    return rho_to_zero(space, sampler.endpoint(rng, t)) > radius;
  });
  const EstimatorResult rho_est = detail::proportion(hits, n, 0.0);
  rep.witnesses.push_back({"rho", rho_est.estimate + sigmas * rho_est.std_error});
  rep.details = {{"t", t},
                 {"R", radius},
                 {"mass_estimate", est.estimate},
                 {"mass_std_error", est.std_error},
                 {"rho_estimate", rho_est.estimate},
                 {"rho_std_error", rho_est.std_error}};
  rep.finish();
  return rep;
}

/// |{h : p_t(h) >= alpha}| <= min(1/alpha, collision/alpha^2). With a ground
/// space, eps0 is half the smallest nonzero rho among members; below it the
/// covering number equals the cardinality.
inline BoundReport covering_bound(const HeatKernel& kernel, double alpha,
                                  const GroundSpace* space = nullptr) {
  require(alpha > 0.0, "covering_bound: alpha must be positive");
  BoundReport rep;
  rep.name = "covering";
  rep.tol = 0.0;
  const double collision = sum_of_squares(kernel.masses);
  rep.bound_value = std::min(1.0 / alpha, collision / (alpha * alpha));
  std::vector<Point> members;
  for (const auto& [h, p] : kernel.masses)
    if (p >= alpha) members.push_back(h);
  std::sort(members.begin(), members.end());
  rep.witnesses.push_back({"cardinality", static_cast<double>(members.size())});
  rep.details = {{"t", kernel.t},
                 {"alpha", alpha},
                 {"collision", collision},
                 {"uncertain", alpha <= kernel.deficit ? 1.0 : 0.0}};
  if (space && members.size() >= 2) {
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < members.size(); ++i)
      for (std::size_t j = i + 1; j < members.size(); ++j) {
        const double r = rho(*space, members[i], members[j]);
        if (r > 0.0) dmin = std::min(dmin, r);
      }
    rep.details["eps0"] = 0.5 * dmin;
  }
  rep.finish();
  return rep;
}

}  // namespace vpdheat
