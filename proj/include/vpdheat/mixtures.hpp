#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vpdheat/spectral.hpp"

namespace vpdheat {

/// Finite atomic measure eta on [0, inf) mixing heat scales.
struct MixtureMeasure {
  struct Atom {
    double u = 0.0;
    double weight = 0.0;
  };
  std::vector<Atom> atoms;

  static MixtureMeasure dirac(double u, double w = 1.0) { return MixtureMeasure{{{u, w}}}; }

  void validate() const {
    require(!atoms.empty(), "mixture: at least one atom is needed");
    for (const auto& a : atoms)
      require(std::isfinite(a.u) && a.u >= 0.0 && std::isfinite(a.weight) && a.weight > 0.0,
              "mixture: atoms need finite u >= 0 and weight > 0");
  }

  double mass() const {
    double m = 0.0;
    for (const auto& a : atoms) m += a.weight;
    return m;
  }
  /// First moment sum u w.
  double moment() const {
    double m = 0.0;
    for (const auto& a : atoms) m += a.u * a.weight;
    return m;
  }
  /// Stop-loss transform c -> sum w (u - c)_+.
  double stop_loss(double c) const {
    double s = 0.0;
    for (const auto& a : atoms) s += a.weight * std::max(0.0, a.u - c);
    return s;
  }
};

/// m_eta(lambda) = sum w e^{-u lambda}.
inline double m_eta(const MixtureMeasure& eta, double lambda) {
  require(lambda >= 0.0, "m_eta: lambda must be nonnegative");
  double s = 0.0;
  for (const auto& a : eta.atoms) s += a.weight * std::exp(-a.u * lambda);
  return s;
}

struct ConvexOrderResult {
  bool holds = false;
  std::string reason;     // empty when holds
  double witness = 0.0;   // violating stop-loss point, when reason is "stop-loss"
  double gap = 0.0;       // size of the violation
};

/// eta1 <=cx eta2 for atomic measures: equal mass, equal first moment, and
/// stop-loss dominance at every atom location (the transforms are piecewise
/// linear with kinks only there).
inline ConvexOrderResult convex_order(const MixtureMeasure& eta1, const MixtureMeasure& eta2,
                                      double tol = 1e-12) {
  eta1.validate();
  eta2.validate();
  ConvexOrderResult r;
  if (std::abs(eta1.mass() - eta2.mass()) > tol) {
    r.reason = "mass";
    r.gap = std::abs(eta1.mass() - eta2.mass());
    return r;
  }
  if (std::abs(eta1.moment() - eta2.moment()) > tol) {
    r.reason = "mean";
    r.gap = std::abs(eta1.moment() - eta2.moment());
    return r;
  }
  std::vector<double> points;
  for (const auto& a : eta1.atoms) points.push_back(a.u);
  for (const auto& a : eta2.atoms) points.push_back(a.u);
  std::sort(points.begin(), points.end());
  for (double c : points) {
    const double gap = eta1.stop_loss(c) - eta2.stop_loss(c);
    if (gap > tol) {
      r.reason = "stop-loss";
      r.witness = c;
      r.gap = gap;
      return r;
    }
  }
  r.holds = true;
  return r;
}

/// K_eta(g,h) = integral cos<h - g, theta> m_eta(lambda(theta)).
inline SpectralValue kernel_eta(const Symbol& sym, const MixtureMeasure& eta, const Point& g,
                                const Point& h, const QuadratureSpec& quad) {
  eta.validate();
  const Point d = h - g;
  const auto r = integrate_torus(sym.rank(), quad, 1, [&](const std::vector<double>& th, double* o) {
    o[0] = std::cos(dot(d, th)) * m_eta(eta, sym(th));
  }, 2 * static_cast<std::size_t>(linf_norm(d)) + 4);
  return {r.values[0], r.errors[0], r.monte_carlo};
}

/// Gram matrix, semimetric table and the two scalar invariants of K_eta.
struct MixtureKernelReport {
  Eigen::MatrixXd gram;
  Eigen::MatrixXd d_eta;
  Eigen::MatrixXd d_eta_spectral;  // from integral |theta(h-g) - 1|^2 m_eta
  double A_eta = 0.0;
  bool A_finite = true;
  double B_eta = 0.0;
  // Kernel-side values from the compound Poisson series.
  double A_kernel = 0.0;
  double B_kernel = 0.0;
};

struct MajorizationCheck {
  std::string name;
  bool passed = false;
  double margin = 0.0;
};

struct MajorizationReport {
  ConvexOrderResult order;
  MixtureKernelReport k1, k2;
  std::vector<MajorizationCheck> checks;
  double psd_min_eigenvalue = 0.0;
  double psd_floor = 0.0;

  bool passed() const {
    if (!order.holds) return false;
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }
};

struct MajorizationOptions {
  double psd_relative = 1e-9;   // min eigenvalue floor, relative to trace
  double inequality_tol = 1e-10;
  double order_tol = 1e-12;
  double series_tol = 1e-12;
};

inline double min_eigenvalue(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

namespace detail {

// Kernel-side B_eta = sum w p_u(0) and A_eta = sum w (-d/dt p_t(0))|_{t=u}.
inline void mixture_kernel_side(const Symbol& sym, const MixtureMeasure& eta, double tol,
                                double& A, double& B) {
  const JumpMeasure nu = sym.levy_measure();
  std::vector<double> times;
  for (const auto& a : eta.atoms) times.push_back(a.u);
  const auto kernels = heat_series_multi(nu, times, tol);
  A = B = 0.0;
  for (std::size_t i = 0; i < eta.atoms.size(); ++i) {
    B += eta.atoms[i].weight * kernels[i].at(zero_point(sym.rank()));
    A += eta.atoms[i].weight * energy_from_kernel(kernels[i], nu);
  }
}

}  // namespace detail

/// Kernels for two mixtures on a common element sample, from one quadrature pass.
inline std::pair<MixtureKernelReport, MixtureKernelReport> mixture_kernels(
    const Symbol& sym, const MixtureMeasure& eta1, const MixtureMeasure& eta2,
    const std::vector<Point>& elements, const QuadratureSpec& quad, double series_tol = 1e-12) {
  eta1.validate();
  eta2.validate();
  const std::size_t n = elements.size();
  // Distinct differences h - g up to sign.
  std::map<Point, std::size_t> diff_index;
  std::vector<Point> diffs;
  std::vector<std::vector<std::size_t>> slot(n, std::vector<std::size_t>(n, 0));
  std::size_t degree = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      require(elements[i].size() == sym.rank(), "mixture: element rank does not match the symbol");
      Point d = elements[j] - elements[i];
      const Point nd = -d;
      if (nd < d) d = nd;
      auto [it, inserted] = diff_index.try_emplace(d, diffs.size());
      if (inserted) {
        diffs.push_back(d);
        degree = std::max(degree, static_cast<std::size_t>(linf_norm(d)));
      }
      slot[i][j] = it->second;
    }
  // Components: for each eta, per difference: K and |theta(d)-1|^2 m; then A, B.
  const std::size_t nd = diffs.size();
  const std::size_t per = 2 * nd + 2;
  const auto r = integrate_torus(sym.rank(), quad, 2 * per, [&](const std::vector<double>& th, double* o) {
    const double lam = sym(th);
    const double m1 = m_eta(eta1, lam), m2 = m_eta(eta2, lam);
    for (std::size_t k = 0; k < nd; ++k) {
      const double c = std::cos(dot(diffs[k], th));
      o[k] = c * m1;
      o[nd + k] = (2.0 - 2.0 * c) * m1;
      o[per + k] = c * m2;
      o[per + nd + k] = (2.0 - 2.0 * c) * m2;
    }
    o[2 * nd] = lam * m1;
    o[2 * nd + 1] = m1;
    o[per + 2 * nd] = lam * m2;
    o[per + 2 * nd + 1] = m2;
  }, 2 * degree + 4);

  auto assemble = [&](std::size_t off, const MixtureMeasure& eta) {
    MixtureKernelReport rep;
    rep.gram.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    rep.d_eta.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    rep.d_eta_spectral.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        rep.gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r.values[off + slot[i][j]];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const auto a = static_cast<Eigen::Index>(i), b = static_cast<Eigen::Index>(j);
        const double sq = rep.gram(a, a) + rep.gram(b, b) - 2.0 * rep.gram(a, b);
        rep.d_eta(a, b) = std::sqrt(std::max(0.0, sq));
        rep.d_eta_spectral(a, b) = std::sqrt(std::max(0.0, r.values[off + nd + slot[i][j]]));
      }
    rep.A_eta = r.values[off + 2 * nd];
    rep.A_finite = std::isfinite(rep.A_eta);
    rep.B_eta = r.values[off + 2 * nd + 1];
    detail::mixture_kernel_side(sym, eta, series_tol, rep.A_kernel, rep.B_kernel);
    return rep;
  };
  return {assemble(0, eta1), assemble(per, eta2)};
}

/// Verifies the heat-scale majorization inequalities for eta1 <=cx eta2 on
/// a sample of elements (differences should lie in the subgroup generated
/// by the jumps) with their transport distances rho_table.
inline MajorizationReport majorization_suite(const Symbol& sym, const MixtureMeasure& eta1,
                                             const MixtureMeasure& eta2,
                                             const std::vector<Point>& elements,
                                             const Matrix& rho_table, const QuadratureSpec& quad,
                                             const MajorizationOptions& opt = {}) {
  MajorizationReport rep;
  rep.order = convex_order(eta1, eta2, opt.order_tol);
  if (!rep.order.holds)
    fail("majorization_suite: eta1 is not below eta2 in convex order (" + rep.order.reason + ")");
  const std::size_t n = elements.size();
  require(rho_table.size() == n, "majorization_suite: rho table does not match the element sample");
  std::tie(rep.k1, rep.k2) = mixture_kernels(sym, eta1, eta2, elements, quad, opt.series_tol);

  const Eigen::MatrixXd diff = rep.k2.gram - rep.k1.gram;
  rep.psd_min_eigenvalue = min_eigenvalue(diff);
  rep.psd_floor = -opt.psd_relative * std::max(rep.k2.gram.trace(), 0.0);
  rep.checks.push_back({"kernel_order_psd", rep.psd_min_eigenvalue >= rep.psd_floor,
                        rep.psd_min_eigenvalue - rep.psd_floor});

  double d_margin = std::numeric_limits<double>::infinity();
  double lip_margin = std::numeric_limits<double>::infinity();
  const double sqrtA2 = std::sqrt(std::max(0.0, rep.k2.A_eta));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const auto a = static_cast<Eigen::Index>(i), b = static_cast<Eigen::Index>(j);
      d_margin = std::min(d_margin, rep.k2.d_eta(a, b) - rep.k1.d_eta(a, b));
      lip_margin = std::min(lip_margin, sqrtA2 * rho_table[i][j] - rep.k2.d_eta(a, b));
    }
  if (n == 0) d_margin = lip_margin = 0.0;
  rep.checks.push_back({"semimetric_order", d_margin >= -opt.inequality_tol, d_margin});
  const double b_margin = rep.k2.B_eta - rep.k1.B_eta;
  rep.checks.push_back({"B_order", b_margin >= -opt.inequality_tol, b_margin});
  if (rep.k2.A_finite) {
    const double a_margin = rep.k2.A_eta - rep.k1.A_eta;
    rep.checks.push_back({"A_order", rep.k1.A_finite && a_margin >= -opt.inequality_tol, a_margin});
    rep.checks.push_back({"semimetric_lipschitz", lip_margin >= -opt.inequality_tol, lip_margin});
  }
  return rep;
}

}  // namespace vpdheat
