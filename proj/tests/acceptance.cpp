// One PASS/FAIL line per acceptance criterion; nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "vpdheat/bounds.hpp"
#include "vpdheat/diagram.hpp"
#include "vpdheat/mixtures.hpp"
#include "vpdheat/montecarlo.hpp"
#include "vpdheat/pipeline.hpp"
#include "vpdheat/spectral.hpp"
#include "vpdheat/transport.hpp"

using namespace vpdheat;
using oracle::bessel_i;
namespace fs = std::filesystem;

namespace {

// Collects the first failure and a running count of checks.
class Tally {
public:
  void expect(bool cond, const std::string& what) {
    ++checks_;
    if (!cond && failure_.empty()) failure_ = what;
  }
  void near(double got, double want, double tol, const std::string& what) {
    std::ostringstream os;
    os.precision(12);
    os << what << ": got " << got << " want " << want << " tol " << tol;
    expect(std::abs(got - want) <= tol, os.str());
  }
  void note(const std::string& s) { notes_ += (notes_.empty() ? "" : "; ") + s; }
  bool ok() const { return failure_.empty(); }
  std::string summary() const {
    std::ostringstream os;
    os << checks_ << " checks";
    if (!notes_.empty()) os << "; " << notes_;
    if (!ok()) os << "; first failure: " << failure_;
    return os.str();
  }

private:
  std::size_t checks_ = 0;
  std::string failure_, notes_;
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

double max_abs_diff(const LatticeMap& a, const LatticeMap& b) {
  double m = 0.0;
  for (const auto& [h, v] : a) m = std::max(m, std::abs(v - value_at(b, h)));
  for (const auto& [h, v] : b) m = std::max(m, std::abs(v - value_at(a, h)));
  return m;
}

struct Fixture {
  GroundSpace space;
  JumpMeasure nu;
};

// Random d1 tables of rank 2 or 3 with an exponential profile.
std::vector<Fixture> random_fixtures(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> alpha(0.5, 2.0);
  std::vector<Fixture> out;
  for (std::size_t i = 0; i < count; ++i) {
    GroundSpace s = oracle::random_space(2 + i % 2, rng);
    JumpMeasure nu = build_nu(s, Profile::exponential(alpha(rng)));
    out.push_back({std::move(s), std::move(nu)});
  }
  return out;
}

std::vector<Point> line_gammas(int radius) {
  std::vector<Point> out;
  for (int n = -radius; n <= radius; ++n)
    if (n) out.push_back({n, -n});
  return out;
}

class ScopedThreads {
public:
  explicit ScopedThreads(const char* value) {
    if (const char* old = std::getenv("VPDHEAT_THREADS")) saved_ = old;
    ::setenv("VPDHEAT_THREADS", value, 1);
  }
  ~ScopedThreads() {
    if (saved_.empty())
      ::unsetenv("VPDHEAT_THREADS");
    else
      ::setenv("VPDHEAT_THREADS", saved_.c_str(), 1);
  }

private:
  std::string saved_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

void bessel_oracle(Tally& t) {
  const double ret = std::exp(-1.0) * bessel_i(0, 1.0);
  const double step = std::exp(-1.0) * bessel_i(1, 1.0);
  const double col = std::exp(-2.0) * bessel_i(0, 2.0);
  const double energy = 2.0 * std::exp(-1.0) * (bessel_i(0, 1.0) - bessel_i(1, 1.0));
  // Tabulated to six digits, truncated.
  t.near(ret, 0.465759, 1e-6, "oracle return");
  t.near(step, 0.207910, 1e-6, "oracle step");
  t.near(col, 0.308508, 1e-6, "oracle collision");
  t.note("oracle energy " + fmt(energy));

  const Symbol sym = make_symbol(oracle::unit_walk());
  const auto q = QuadratureSpec::grid(64);
  const HeatKernel k = heat_series(oracle::unit_walk(), 0.5, 1e-12);
  for (int sgn : {1, -1}) {
    t.near(k.at({sgn, -sgn}), step, 1e-8, "series p(kappa)");
    t.near(heat_fourier(sym, {sgn, -sgn}, 0.5, q).value, step, 1e-8, "quadrature p(kappa)");
  }
  const InvariantReport rep = invariants(sym, {0.5}, {}, q);
  const auto& r = rep.rows[0];
  t.expect(rep.kernel_route == "series", "kernel route " + rep.kernel_route);
  t.near(r.ret, ret, 1e-8, "quadrature return");
  t.near(r.ret_kernel, ret, 1e-8, "series return");
  t.near(r.collision, col, 1e-8, "quadrature collision");
  t.near(r.collision_kernel, col, 1e-8, "series collision");
  t.near(r.energy, energy, 1e-8, "quadrature energy");
  t.near(r.energy_kernel, energy, 1e-8, "series energy");
}

void resolvent_closed_form(Tally& t) {
  const Symbol sym = make_symbol(oracle::unit_walk());
  const InvariantReport rep = invariants(sym, {}, {1.0}, QuadratureSpec::grid(64));
  t.near(rep.resolvent[0].spectral, 1.0 / std::sqrt(5.0), 1e-8, "torus quadrature");
  t.near(rep.resolvent[0].time_integral, 1.0 / std::sqrt(5.0), 1e-4, "time integral");
}

void route_agreement(Tally& t) {
  double worst = 0.0;
  for (const auto& fx : random_fixtures(10, 45)) {
    const Symbol sym = make_symbol(fx.nu);
    for (double time : {0.3, 1.0, 2.5}) {
      const HeatKernel k = heat_series(fx.nu, time, 1e-12);
      for (const auto& [h, v] : k.masses) {
        if (linf_norm(h) > 2) continue;
        const double d = std::abs(heat_fourier(sym, h, time, QuadratureSpec::grid(64)).value - v);
        worst = std::max(worst, d);
        t.expect(d <= 1e-8, "discrepancy " + fmt(d) + " at " + point_string(h));
      }
    }
  }
  t.note("max discrepancy " + fmt(worst));
}

void semigroup(Tally& t) {
  for (const auto& fx : random_fixtures(10, 45)) {
    const auto ks = heat_series_multi(fx.nu, {0.4, 0.7, 1.1}, 1e-12);
    for (const auto& k : ks) {
      bool sym = true;
      for (const auto& [h, v] : k.masses) sym = sym && v == k.at(-h);
      t.expect(sym, "p_t(h) != p_t(-h)");
      t.expect(k.sum() >= 1.0 - 1e-12, "mass " + fmt(k.sum()));
    }
    const double d = max_abs_diff(convolve(ks[0].masses, ks[1].masses), ks[2].masses);
    t.expect(d <= ks[0].deficit + ks[1].deficit + ks[2].deficit + 1e-14, "semigroup defect " + fmt(d));
  }
}

void projection(Tally& t) {
  std::mt19937_64 rng(46);
  for (int trial = 0; trial < 5; ++trial) {
    const GroundSpace s = oracle::random_space(3, rng);
    const Profile psi = Profile::exponential(0.8);
    const HeatKernel full = heat_series(build_nu(s, psi), 0.8, 1e-13);
    const Symbol sub = restrict_symbol(s, psi, {0, 1});
    const HeatKernel restricted = heat_series(sub.levy_measure(), 0.8, 1e-13);
    const double d = max_abs_diff(marginalize(full.masses, {0, 1}), restricted.masses);
    t.expect(d <= 1e-8, "marginal discrepancy " + fmt(d));
  }
}

void truncation(Tally& t) {
  std::mt19937_64 rng(47);
  const GroundSpace s = oracle::random_space(3, rng);
  const JumpMeasure nu = build_nu(s, Profile::exponential(0.6));
  double rmax = 0.0;
  for (double r : jump_sizes(s, nu)) rmax = std::max(rmax, r);
  const std::vector<double> radii{0.25 * rmax, 0.5 * rmax, 0.75 * rmax, rmax};
  std::uniform_real_distribution<double> ang(0.0, kTwoPi);
  std::vector<std::vector<double>> thetas(100);
  for (auto& th : thetas) th = {ang(rng), ang(rng), ang(rng)};
  std::vector<double> prev_sym(thetas.size(), -1.0);
  double prev_ret = 2.0, prev_col = 2.0;
  for (double r : radii) {
    const JumpMeasure nr = truncate_nu(s, nu, r);
    const Symbol sym = make_symbol(nr);
    for (std::size_t i = 0; i < thetas.size(); ++i) {
      const double v = sym(thetas[i]);
      t.expect(v >= prev_sym[i] - 1e-15, "symbol decreased at R=" + fmt(r));
      prev_sym[i] = v;
    }
    const HeatKernel k = heat_series(nr, 1.0, 1e-12);
    const double ret = k.at(zero_point(3)), col = sum_of_squares(k.masses);
    t.expect(ret <= prev_ret + 1e-12, "return increased at R=" + fmt(r));
    t.expect(col <= prev_col + 1e-12, "collision increased at R=" + fmt(r));
    prev_ret = ret;
    prev_col = col;
  }
  const HeatKernel k = heat_series(nu, 1.0, 1e-12);
  t.near(prev_ret, k.at(zero_point(3)), 1e-6, "return at largest R");
  t.near(prev_col, sum_of_squares(k.masses), 1e-6, "collision at largest R");
}

void rkhs(Tally& t) {
  std::mt19937_64 rng(49);
  const GroundSpace s = oracle::random_space(2, rng);
  const JumpMeasure nu = build_nu(s, Profile::exponential(0.7));
  const Symbol sym = make_symbol(nu);
  const auto q = QuadratureSpec::grid(64);
  std::uniform_int_distribution<int> coord(-3, 3);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  double rmax = 0.0;
  for (double r : jump_sizes(s, nu)) rmax = std::max(rmax, r);
  for (int trial = 0; trial < 10; ++trial) {
    LatticeMap f;
    for (int i = 0; i < 5; ++i) f[{coord(rng), coord(rng)}] = val(rng);
    double prev = 0.0;
    for (double time : {0.0, 0.2, 0.5, 1.0}) {
      const double n = rkhs_norm(sym, f, time, q);
      t.expect(n >= prev - 1e-12, "nesting fails at t=" + fmt(time));
      prev = n;
    }
    const double full = rkhs_norm(sym, f, 1.0, q);
    double prev_r = 0.0;
    for (double r : {0.25 * rmax, 0.5 * rmax, 0.75 * rmax, rmax}) {
      const double n = rkhs_norm(make_symbol(truncate_nu(s, nu, r)), f, 1.0, q);
      t.expect(n >= prev_r - 1e-12 && n <= full + 1e-10, "truncated norm not monotone at R=" + fmt(r));
      prev_r = n;
    }
    t.near(prev_r, full, 1e-10, "truncated norm limit");
  }
}

VpdElement random_element(std::size_t rank, int spread, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> c(-spread, spread);
  VpdElement g(rank);
  for (auto& x : g) x = c(rng);
  return g;
}

void transport(Tally& t) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> count(0, 3);
  std::uniform_int_distribution<std::size_t> pick(0, 3);
  for (int checked = 0; checked < 200;) {
    const GroundSpace s = oracle::random_space(4, rng);
    Diagram a{std::vector<int>(4, 0)}, b{std::vector<int>(4, 0)};
    const int na = count(rng), nb = count(rng);
    if (na + nb > 6) continue;
    for (int i = 0; i < na; ++i) ++a.counts[pick(rng)];
    for (int i = 0; i < nb; ++i) ++b.counts[pick(rng)];
    t.near(w1(s, a, b), oracle::brute_w1(s, expand(a), expand(b)), 1e-12, "W1 vs exhaustive");
    ++checked;
  }
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t r = 2 + trial % 4;
    const GroundSpace s = oracle::random_space(r, rng);
    const auto g = random_element(r, 2, rng), h = random_element(r, 2, rng), k = random_element(r, 2, rng),
               w = random_element(r, 3, rng);
    const double gh = rho(s, g, h);
    t.expect(gh >= 0.0 && (g == h) == (gh == 0.0), "rho definiteness");
    t.near(gh, rho(s, h, g), 1e-12, "rho symmetry");
    t.expect(gh <= rho(s, g, k) + rho(s, k, h) + 1e-9, "rho triangle inequality");
    t.near(rho(s, g + w, h + w), gh, 1e-12, "rho translation invariance");
  }
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t r = 1 + trial % 5;
    const GroundSpace s = oracle::random_space(r, rng);
    const auto g = random_element(r, 3, rng);
    t.expect(rho_to_zero(s, g) <= mass(s, g) + 1e-12, "rho(g,0) > M(g)");
  }
  const auto [space, cycle] = oracle::s3_word_metric();
  VpdElement g(space.rank(), 0);
  g[cycle] = 1;
  t.near(rho_to_zero(space, g), 2.0, 0.0, "word-metric fixture");
}

void persistence(Tally& t) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const WeightedGraph g = oracle::random_graph(25, rng);
    const auto fast = h0_persistence(g), slow = oracle::threshold_scan_h0(g);
    bool same = fast.size() == slow.size();
    for (std::size_t i = 0; same && i < fast.size(); ++i)
      same = fast[i].point == slow[i].point && fast[i].multiplicity == slow[i].multiplicity;
    t.expect(same, "diagram mismatch on graph " + std::to_string(trial));
  }
}

void expect_report(Tally& t, const BoundReport& rep, const std::string& where) {
  t.expect(rep.passed, rep.name + " fails " + where + " margin " + fmt(rep.margin));
}

void bound_suite(Tally& t) {
  // Lipschitz: fixtures with psi(d) d^2 >= 2 on every pair.
  {
    const GroundSpace s = oracle::two_point_space();
    const Symbol sym = make_symbol(oracle::unit_walk());
    for (double time : {0.05, 0.5, 2.0}) {
      const HeatKernel k = heat_series(oracle::unit_walk(), time, 1e-13);
      expect_report(t, lipschitz_bound(s, sym, k.masses, time, line_gammas(6), QuadratureSpec::grid(64)),
                    "on the unit walk");
    }
    std::mt19937_64 rng(71);
    std::uniform_int_distribution<int> coord(-2, 2);
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
      const GroundSpace rs = oracle::random_space(3, rng);
      const JumpMeasure nu = build_nu(rs, Profile::power(2.0, 2.0));
      LatticeMap f;
      for (int i = 0; i < 6; ++i) f[{coord(rng), coord(rng), coord(rng)}] = val(rng);
      const auto gammas = lipschitz_witnesses(nu, f, 100, 7 + static_cast<std::uint64_t>(trial));
      for (double time : {0.1, 1.0})
        expect_report(t, lipschitz_bound(rs, make_symbol(nu), f, time, gammas, QuadratureSpec::grid(32)),
                      "on a power-profile fixture");
    }
  }
  // Sobolev, including the extremizer.
  {
    const Symbol unit = make_symbol(oracle::unit_walk());
    const auto ext = sobolev_extremizer(unit, 1.0, 40, QuadratureSpec::grid(256));
    expect_report(t, ext, "extremizer");
    t.expect(ext.details.at("optimality") >= 0.98, "extremizer ratio " + fmt(ext.details.at("optimality")));
    double worst = ext.details.at("optimality");
    std::mt19937_64 rng(72);
    std::uniform_int_distribution<int> coord(-2, 2);
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
      const GroundSpace s = oracle::random_space(2, rng);
      const Symbol sym = make_symbol(build_nu(s, Profile::exponential(0.5)));
      LatticeMap f;
      for (int i = 0; i < 5; ++i) f[{coord(rng), coord(rng)}] = val(rng);
      for (double sv : {0.5, 2.0}) {
        expect_report(t, sobolev_bound(sym, f, sv, QuadratureSpec::grid(64)), "on a random f");
        const auto e = sobolev_extremizer(sym, sv, 12, QuadratureSpec::grid(128));
        expect_report(t, e, "random extremizer");
        t.expect(e.details.at("optimality") >= 0.98, "extremizer ratio " + fmt(e.details.at("optimality")));
        worst = std::min(worst, e.details.at("optimality"));
      }
    }
    t.note("min extremizer ratio " + fmt(worst));
  }
  // Mass tail, including the single-jump closed form.
  {
    const GroundSpace s = oracle::two_point_space();
    const auto rep = mass_tail_bound(s, oracle::unit_walk(), 0.1, 1.5, 1000000, 81);
    expect_report(t, rep, "single jump");
    t.near(rep.bound_value, 0.2, 1e-15, "single-jump bound");
    t.expect(1.0 - std::exp(-0.2) <= rep.bound_value, "1 - e^{-0.2} above the bound");
    std::mt19937_64 rng(73);
    for (int trial = 0; trial < 5; ++trial) {
      const GroundSpace rs = oracle::random_space(3, rng);
      const JumpMeasure nu = build_nu(rs, Profile::exponential(1.0));
      for (double time : {0.5, 1.0, 2.0})
        expect_report(t, mass_tail_bound(rs, nu, time, 2.0, 100000, 90 + static_cast<std::uint64_t>(trial)),
                      "random fixture");
    }
  }
  // Covering across alpha.
  {
    std::mt19937_64 rng(74);
    for (int trial = 0; trial < 5; ++trial) {
      const GroundSpace s = oracle::random_space(3, rng);
      const JumpMeasure nu = build_nu(s, Profile::exponential(0.7));
      for (double time : {0.25, 1.0, 3.0}) {
        const HeatKernel k = heat_series(nu, time, 1e-12);
        for (double alpha : {1e-4, 1e-3, 1e-2, 0.1, 0.5})
          expect_report(t, covering_bound(k, alpha, &s), "alpha " + fmt(alpha));
      }
    }
  }
  // Character bracket.
  {
    std::mt19937_64 rng(51);
    std::uniform_real_distribution<double> ang(-kPi, kPi);
    std::uniform_int_distribution<int> coord(-2, 2);
    for (int trial = 0; trial < 100; ++trial) {
      const GroundSpace s = oracle::random_space(3, rng);
      const Character th({ang(rng), ang(rng), ang(rng)});
      const auto lip = char_lipschitz(s, th);
      t.near(lip.lower, 2.0 / kPi * lip.phase_lip, 1e-12, "lower end of the bracket");
      double best = 0.0;
      auto consider = [&](const Point& g) {
        if (is_zero(g)) return;
        const double ratio = character_gap(th, g) / rho_to_zero(s, g);
        t.expect(ratio <= lip.phase_lip + 1e-12, "ratio above phase_lip");
        best = std::max(best, ratio);
      };
      for (int i = 0; i < 30; ++i) consider({coord(rng), coord(rng), coord(rng)});
      for (std::size_t u = 0; u < 3; ++u)
        for (std::size_t v = 0; v <= 3; ++v) {
          if (u == v) continue;
          Point g(3, 0);
          g[u] = 1;
          if (v < 3) g[v] = -1;
          consider(g);
        }
      t.expect(best >= lip.lower - 1e-12, "sampled ratios below 2/pi phase_lip");
    }
  }
}

Matrix rho_table(const GroundSpace& s, const std::vector<Point>& elems) {
  Matrix r(elems.size(), std::vector<double>(elems.size(), 0.0));
  for (std::size_t i = 0; i < elems.size(); ++i)
    for (std::size_t j = 0; j < elems.size(); ++j) r[i][j] = rho(s, elems[i], elems[j]);
  return r;
}

// eta2 is a mean-preserving spread of eta1.
std::pair<MixtureMeasure, MixtureMeasure> random_ordered_pair(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.2, 2.0), w(0.2, 1.0), frac(0.0, 1.0);
  MixtureMeasure eta1, eta2;
  const int atoms = 1 + static_cast<int>(rng() % 3);
  for (int i = 0; i < atoms; ++i) {
    const double ui = u(rng), wi = w(rng), a = frac(rng) * ui;
    eta1.atoms.push_back({ui, wi});
    eta2.atoms.push_back({ui - a, wi / 2.0});
    eta2.atoms.push_back({ui + a, wi / 2.0});
  }
  return {eta1, eta2};
}

std::vector<Point> random_words(const JumpMeasure& nu, std::size_t count, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, nu.pairs.size() - 1);
  std::uniform_int_distribution<int> len(0, 3), sign(0, 1);
  std::vector<Point> out;
  for (std::size_t i = 0; i < count; ++i) {
    Point g = zero_point(nu.rank);
    for (int k = len(rng); k > 0; --k) {
      const Point& kappa = nu.pairs[pick(rng)].kappa;
      g = sign(rng) ? g + kappa : g - kappa;
    }
    out.push_back(g);
  }
  return out;
}

void expect_majorization(Tally& t, const MajorizationReport& rep, const std::string& where) {
  t.expect(rep.order.holds, where + ": pair not in convex order");
  t.expect(rep.checks.size() == 5, where + ": expected five checks");
  for (const auto& c : rep.checks) t.expect(c.passed, where + ": " + c.name + " margin " + fmt(c.margin));
}

void majorization(Tally& t) {
  {
    const GroundSpace s = oracle::two_point_space();
    std::vector<Point> elems;
    for (int n = -3; n <= 3; ++n) elems.push_back({n, -n});
    const MixtureMeasure spread{{{0.0, 0.5}, {2.0, 0.5}}};
    expect_majorization(t,
                        majorization_suite(make_symbol(oracle::unit_walk()), MixtureMeasure::dirac(1.0), spread,
                                           elems, rho_table(s, elems), QuadratureSpec::grid(64)),
                        "dirac vs spread");
  }
  std::mt19937_64 rng(62);
  for (int trial = 0; trial < 5; ++trial) {
    const GroundSpace s = oracle::random_space(2 + trial % 2, rng);
    const JumpMeasure nu = build_nu(s, Profile::power(2.0, 2.0));
    const auto [e1, e2] = random_ordered_pair(rng);
    const auto elems = random_words(nu, 6, rng);
    expect_majorization(t,
                        majorization_suite(make_symbol(nu), e1, e2, elems, rho_table(s, elems),
                                           QuadratureSpec::grid(32)),
                        "random pair " + std::to_string(trial));
  }
}

void expect_z(Tally& t, const EstimatorResult& r, const std::string& what) {
  t.expect(std::abs(r.z_score) <= 4.0, what + " z = " + fmt(r.z_score));
}

void monte_carlo(Tally& t) {
  const auto q = QuadratureSpec::grid(64);
  auto spectral_return = [&](const Symbol& sym, double time) {
    return heat_fourier(sym, zero_point(sym.rank()), time, q).value;
  };
  double worst = 0.0;
  auto track = [&](const EstimatorResult& r, const std::string& what) {
    expect_z(t, r, what);
    worst = std::max(worst, std::abs(r.z_score));
  };
  {
    const Symbol sym = make_symbol(oracle::unit_walk());
    const auto ret = estimate_return(oracle::unit_walk(), 0.5, 1000000, 101);
    track(ret, "unit-walk return");
    t.near(ret.reference, spectral_return(sym, 0.5), 1e-10, "return reference");
    const auto col = estimate_collision(oracle::unit_walk(), 0.5, 1000000, 102);
    track(col, "unit-walk collision");
    t.near(col.reference, spectral_return(sym, 1.0), 1e-10, "collision reference");
    track(estimate_mass_tail(oracle::two_point_space(), oracle::unit_walk(), 0.5, 3.0, 1000000, 103),
          "unit-walk mass tail");
  }
  std::mt19937_64 rng(104);
  for (int trial = 0; trial < 3; ++trial) {
    const GroundSpace s = oracle::random_space(3, rng);
    const JumpMeasure nu = build_nu(s, Profile::exponential(0.8));
    const Symbol sym = make_symbol(nu);
    const std::uint64_t seed = 200 + static_cast<std::uint64_t>(trial);
    const auto ret = estimate_return(nu, 1.0, 1000000, seed);
    track(ret, "return");
    t.near(ret.reference, spectral_return(sym, 1.0), 1e-9, "return reference");
    const auto col = estimate_collision(nu, 1.0, 1000000, seed);
    track(col, "collision");
    t.near(col.reference, spectral_return(sym, 2.0), 1e-9, "collision reference");
    track(estimate_mass_tail(s, nu, 1.0, 2.0, 1000000, seed), "mass tail");
  }
  t.note("max |z| " + fmt(worst));

  const GroundSpace s = oracle::random_space(3, rng);
  const JumpMeasure nu = build_nu(s, Profile::exponential(0.8));
  auto run = [&](const char* threads) {
    ScopedThreads scope(threads);
    return std::tuple{estimate_return(nu, 1.0, 100000, 7).estimate, estimate_collision(nu, 1.0, 100000, 7).estimate,
                      estimate_mass_tail(s, nu, 1.0, 2.0, 100000, 7).estimate,
                      endpoint_histogram(nu, 1.0, 100000, 7)};
  };
  t.expect(run("1") == run("4"), "estimates depend on the worker count");
}

void pipeline(Tally& t) {
  const fs::path dir = fs::temp_directory_path() / "vpdheat_acceptance_pipeline";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_json(dir / "a.json", graph_to_json(generate_ws_graph(20, 4, 0.3, 1, 8, 11)));
  write_json(dir / "b.json", graph_to_json(generate_ws_graph(24, 4, 0.3, 1, 8, 12)));
  PipelineConfig cfg;
  cfg.graph_a = dir / "a.json";
  cfg.graph_b = dir / "b.json";
  cfg.t_grid = parse_grid("0.25:2:4");
  cfg.s_grid = parse_grid("0.5:2:3");
  cfg.trunc_radii = {1.0, 2.0, 4.0};
  cfg.output_dir = dir / "out";
  const PipelineResult res = run_pipeline(cfg);
  t.note("rank " + std::to_string(res.manifest["rank"].get<int>()) + ", route " +
         res.manifest["kernel_route"].get<std::string>());
  t.expect(res.cross_checks_ok, "cross-checks failed");
  double worst = 0.0;
  for (const auto& c : res.manifest["cross_checks"]) {
    const double d = c["discrepancy"].get<double>(), tol = c["tolerance"].get<double>();
    t.expect(d <= tol, "cross-check " + c.dump());
    worst = std::max(worst, d);
  }
  t.note("max cross-check discrepancy " + fmt(worst));
  const auto rows = parse_csv(slurp(cfg.output_dir / "invariants.csv"));
  for (const char* name : {"return", "collision", "energy"}) {
    std::size_t k = 0;
    while (k < rows.at(0).size() && rows[0][k] != name) ++k;
    t.expect(k < rows[0].size(), std::string("missing column ") + name);
    if (k == rows[0].size()) continue;
    for (std::size_t i = 2; i < rows.size(); ++i)
      t.expect(parse_real(rows[i][k]) < parse_real(rows[i - 1][k]), std::string(name) + " not strictly decreasing");
  }
  for (const auto& f : res.manifest["files"])
    t.expect(fs::exists(cfg.output_dir / f.get<std::string>()), "missing output " + f.get<std::string>());
}

struct Criterion {
  std::string name;
  std::function<void(Tally&)> run;
  double time_limit = 0.0;  // seconds; 0 means none
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"bessel_oracle", bessel_oracle, 1.0},
      {"resolvent_closed_form", resolvent_closed_form, 1.0},
      {"route_agreement", route_agreement, 30.0},
      {"semigroup_symmetry_normalization", semigroup},
      {"projection_consistency", projection},
      {"truncation_monotonicity", truncation},
      {"rkhs_nesting_and_convergence", rkhs},
      {"transport", transport},
      {"persistence", persistence},
      {"bound_suite", bound_suite},
      {"majorization", majorization},
      {"monte_carlo", monte_carlo, 60.0},
      {"pipeline_desk_scale", pipeline},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Tally t;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(t);
    } catch (const std::exception& e) {
      t.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = seconds_since(t0);
    if (c.time_limit > 0.0) t.expect(secs < c.time_limit, "runtime above " + fmt(c.time_limit) + " s");
    const bool ok = t.ok();
    failures += !ok;
    std::cout << (ok ? "PASS " : "FAIL ") << c.name << ": " << t.summary() << " (" << fmt(secs) << " s)"
              << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
