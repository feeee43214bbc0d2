#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "vpdheat/bounds.hpp"
#include "vpdheat/io.hpp"

namespace vpdheat {

inline constexpr const char* kVersion = "0.1.0";

/// Watts–Strogatz small-world graph: ring lattice with k nearest neighbours,
/// each edge rewired with probability p (no self-loops, no duplicates),
/// integer weights uniform in [w_min, w_max].
inline WeightedGraph generate_ws_graph(int n, int k, double p, int w_min, int w_max, std::uint64_t seed) {
  require(n > k && k >= 2 && k % 2 == 0, "gen-graph: need n > k >= 2 with k even");
  require(p >= 0.0 && p <= 1.0, "gen-graph: p must lie in [0, 1]");
  require(1 <= w_min && w_min <= w_max, "gen-graph: need 1 <= w_min <= w_max");
  auto rng = stream_for(seed, 0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> vertex(0, n - 1);
  std::uniform_int_distribution<int> weight(w_min, w_max);

  std::set<std::pair<int, int>> edges;
  auto key = [](int a, int b) { return std::make_pair(std::min(a, b), std::max(a, b)); };
  for (int u = 0; u < n; ++u)
    for (int j = 1; j <= k / 2; ++j) edges.insert(key(u, (u + j) % n));

  for (int j = 1; j <= k / 2; ++j)
    for (int u = 0; u < n; ++u) {
      const auto e = key(u, (u + j) % n);
      if (coin(rng) >= p || !edges.count(e)) continue;
      // Keep u, move the other end; give up if u is already saturated.
      if (static_cast<int>(std::count_if(edges.begin(), edges.end(), [&](const auto& x) {
            return x.first == u || x.second == u;
          })) >= n - 1)
        continue;
      int w;
      do {
        w = vertex(rng);
      } while (w == u || edges.count(key(u, w)));
      edges.erase(e);
      edges.insert(key(u, w));
    }

  WeightedGraph g;
  g.vertex_count = n;
  for (const auto& [a, b] : edges) g.edges.push_back({a, b, static_cast<double>(weight(rng))});
  return g;
}

struct PipelineConfig {
  std::filesystem::path graph_a, graph_b;
  Profile profile = Profile::exponential(1.0);
  std::vector<double> t_grid{0.25, 0.5, 1.0, 2.0};
  std::vector<double> s_grid{0.5, 1.0, 2.0};
  std::optional<QuadratureSpec> quadrature;  // grid when rank <= 4, else Monte Carlo
  std::vector<double> trunc_radii;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 1;
  std::size_t mc_samples = 100000;           // mass-tail witnesses
  std::size_t mc_quadrature_samples = 2000000;
  std::size_t walk_samples = 1000000;        // kernel side beyond the grid rank limit

  void validate() const {
    auto increasing = [](const std::vector<double>& g) {
      for (std::size_t i = 0; i < g.size(); ++i)
        if (!(g[i] > 0.0) || (i && g[i] <= g[i - 1])) return false;
      return g.size() >= 2;
    };
    require(increasing(t_grid), "pipeline: t grid must be positive, increasing, >= 2 points");
    require(increasing(s_grid), "pipeline: s grid must be positive, increasing, >= 2 points");
    for (double r : trunc_radii) require(r > 0.0, "pipeline: truncation radii must be positive");
    profile.validate();
  }
};

struct PipelineResult {
  std::vector<std::filesystem::path> files;
  InvariantReport invariants;
  json manifest;
  bool cross_checks_ok = true;
  bool bounds_ok = true;
};

inline QuadratureSpec pipeline_quadrature(const std::optional<QuadratureSpec>& requested,
                                          std::size_t rank, std::size_t mc_samples, std::uint64_t seed) {
  if (requested) return *requested;
  QuadratureSpec grid;
  return rank <= grid.max_grid_rank ? grid : QuadratureSpec::monte_carlo(mc_samples, seed);
}

/// Everything derived from two diagrams: the shared ground space, the
/// virtual difference and the walk on the generated group.
struct Model {
  std::vector<DiagramPoint> diagram_a, diagram_b;
  GroundSpace space;
  VpdElement vpd;
  JumpMeasure nu;
  Symbol sym;
};

inline Model build_model(std::vector<DiagramPoint> a, std::vector<DiagramPoint> b, const Profile& profile) {
  Model m;
  m.diagram_a = std::move(a);
  m.diagram_b = std::move(b);
  m.space = ground_space_of({m.diagram_a, m.diagram_b});
  m.vpd = element_of(m.space, m.diagram_a) - element_of(m.space, m.diagram_b);
  m.nu = build_nu(m.space, profile);
  m.sym = make_symbol(m.nu);
  return m;
}

inline Model model_from_graphs(const std::filesystem::path& a, const std::filesystem::path& b,
                               const Profile& profile) {
  return build_model(h0_persistence(graph_from_json(read_json(a))),
                     h0_persistence(graph_from_json(read_json(b))), profile);
}

/// p_t at the given points for every t, by spectral quadrature:
/// p_t(g) = integral cos<g, theta> e^{-t lambda(theta)}.
inline std::vector<LatticeMap> heat_values(const Symbol& sym, const std::vector<double>& t_grid,
                                           const std::vector<Point>& points, const QuadratureSpec& quad) {
  const std::size_t np = points.size(), nt = t_grid.size();
  const QuadResult r = integrate_torus(sym.rank(), quad, nt * np, [&](const std::vector<double>& th, double* o) {
    const double lam = sym(th);
    thread_local std::vector<double> c;
    c.resize(np);
    for (std::size_t p = 0; p < np; ++p) c[p] = std::cos(dot(points[p], th));
    for (std::size_t i = 0; i < nt; ++i) {
      const double e = std::exp(-t_grid[i] * lam);
      for (std::size_t p = 0; p < np; ++p) o[i * np + p] = c[p] * e;
    }
  });
  std::vector<LatticeMap> out(nt);
  for (std::size_t i = 0; i < nt; ++i)
    for (std::size_t p = 0; p < np; ++p) out[i][points[p]] = r.values[i * np + p];
  return out;
}

/// Empirical kernel from n endpoint samples.
inline HeatKernel empirical_kernel(const JumpMeasure& nu, double t, std::size_t n, std::uint64_t seed) {
  HeatKernel k;
  k.t = t;
  for (const auto& [h, c] : endpoint_histogram(nu, t, n, seed))
    k.masses[h] = static_cast<double>(c) / static_cast<double>(n);
  return k;
}

struct BoundOptions {
  std::size_t mass_tail_samples = 100000;
  std::size_t covering_samples = 1000000;  // empirical kernel when the series is not used
  std::size_t lipschitz_witnesses = 200;
  std::uint64_t seed = 1;
};

/// Bound reports per grid point, keyed by output file name under bounds/:
/// Lipschitz, mass tail and covering per t; Sobolev per s. With the series
/// route the Lipschitz test function p_t and the covering kernel are exact;
/// otherwise p_t comes from quadrature and the covering set from samples.
inline std::vector<std::pair<std::string, BoundReport>> bound_reports(
    const Model& m, const InvariantReport& inv, const std::vector<double>& t_grid,
    const std::vector<double>& s_grid, const QuadratureSpec& quad, const BoundOptions& opt) {
  std::vector<std::pair<std::string, BoundReport>> out;
  const double vpd_mass = mass(m.space, m.vpd);
  const bool series = inv.kernel_route == "series";
  const Point origin = zero_point(m.space.rank());

  std::vector<HeatKernel> kernels;
  std::vector<LatticeMap> values;
  std::vector<std::vector<Point>> gammas(t_grid.size());
  if (series) {
    kernels = heat_series_multi(m.nu, t_grid, 1e-12);
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
      LatticeMap near;
      for (const auto& [h, p] : kernels[i].masses)
        if (linf_norm(h) <= 1) near.emplace(h, p);
      gammas[i] = lipschitz_witnesses(m.nu, near, opt.lipschitz_witnesses, opt.seed + i);
    }
  } else {
    const auto shared = lipschitz_witnesses(m.nu, {}, opt.lipschitz_witnesses, opt.seed);
    std::vector<Point> points{origin};
    points.insert(points.end(), shared.begin(), shared.end());
    values = heat_values(m.sym, t_grid, points, quad);
    std::fill(gammas.begin(), gammas.end(), shared);
  }

  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    const double t = t_grid[i];
    const std::string tag = "t" + std::to_string(i) + ".json";
    const InvariantRow& row = inv.rows.at(i);
    // f = p_t lies in H_t with ||p_t||_{H_t}^2 = p_t(0).
    const LatticeMap& f = series ? kernels[i].masses : values[i];
    BoundReport lip = lipschitz_report(m.space, f, std::sqrt(std::max(0.0, row.ret)), row.energy, gammas[i]);
    lip.details["t"] = t;
    lip.details["quadrature_values"] = series ? 0.0 : 1.0;
    out.emplace_back("lipschitz_" + tag, std::move(lip));
    if (m.space.rank() > 0)
      out.emplace_back("mass_tail_" + tag, mass_tail_bound(m.space, m.nu, t, std::max(vpd_mass, 0.5),
                                                           opt.mass_tail_samples, opt.seed + 1000 + i));
    const double alpha = std::max(0.5 * row.ret, 1e-9);
    if (series) {
      out.emplace_back("covering_" + tag, covering_bound(kernels[i], alpha, &m.space));
    } else {
      const std::size_t n = opt.covering_samples;
      const HeatKernel k = empirical_kernel(m.nu, t, n, opt.seed + 2000 + i);
      BoundReport cov = covering_bound(k, alpha, &m.space);
      // Members within 3 sigma of alpha make the empirical cardinality uncertain.
      const double band = 3.0 * std::sqrt(alpha * (1.0 - alpha) / static_cast<double>(n));
      bool near_threshold = false;
      for (const auto& [h, p] : k.masses) near_threshold = near_threshold || std::abs(p - alpha) < band;
      cov.details["empirical"] = 1.0;
      cov.details["samples"] = static_cast<double>(n);
      cov.details["uncertain"] = near_threshold ? 1.0 : 0.0;
      out.emplace_back("covering_" + tag, std::move(cov));
    }
  }
  LatticeMap delta0;
  delta0[origin] = 1.0;
  // G_s(0,0) is the spectral resolvent already computed for the invariants.
  for (std::size_t j = 0; j < s_grid.size(); ++j) {
    BoundReport sob = sobolev_report(m.nu, delta0, s_grid[j], inv.resolvent.at(j).spectral);
    out.emplace_back("sobolev_s" + std::to_string(j) + ".json", std::move(sob));
  }
  return out;
}

inline json cross_check_table(const InvariantReport& inv) {
  json checks = json::array();
  for (const auto& r : inv.rows)
    checks.push_back({{"quantity", "heat_invariants"}, {"t", r.t}, {"discrepancy", r.discrepancy},
                      {"tolerance", r.tolerance}, {"ok", r.ok()}});
  for (const auto& r : inv.resolvent)
    checks.push_back({{"quantity", "resolvent"}, {"s", r.s}, {"discrepancy", r.discrepancy},
                      {"tolerance", r.tolerance}, {"ok", r.ok()}});
  return checks;
}

/// Graphs -> diagrams -> virtual diagram -> invariants and bounds, written
/// under cfg.output_dir.
inline PipelineResult run_pipeline(const PipelineConfig& cfg) {
  cfg.validate();
  namespace fs = std::filesystem;
  PipelineResult res;
  const fs::path out = cfg.output_dir;
  fs::create_directories(out / "bounds");
  auto save_json = [&](const fs::path& rel, const json& j) {
    write_json(out / rel, j);
    res.files.push_back(rel);
  };
  auto save_csv = [&](const fs::path& rel, const CsvWriter& csv) {
    csv.save(out / rel);
    res.files.push_back(rel);
  };

  const Model m = model_from_graphs(cfg.graph_a, cfg.graph_b, cfg.profile);
  save_json("diagrams_a.json", diagram_to_json(m.diagram_a));
  save_json("diagrams_b.json", diagram_to_json(m.diagram_b));
  save_json("vpd.json", diagram_to_json(points_of(m.space, m.vpd)));

  const QuadratureSpec quad =
      pipeline_quadrature(cfg.quadrature, m.space.rank(), cfg.mc_quadrature_samples, cfg.seed);
  InvariantOptions inv_opt;
  inv_opt.walk_samples = cfg.walk_samples;
  inv_opt.walk_seed = cfg.seed;
  res.invariants = invariants(m.sym, cfg.t_grid, cfg.s_grid, quad, inv_opt);
  const InvariantReport& inv = res.invariants;
  res.cross_checks_ok = inv.ok();
  save_csv("invariants.csv", invariants_csv(inv));
  save_csv("resolvent.csv", resolvent_csv(inv));

  json bound_summary = json::array();
  CsvWriter bounds_table({"bound", "variable", "value", "bound_value", "max_achieved", "margin", "passed"});
  for (const auto& [file, rep] :
       bound_reports(m, inv, cfg.t_grid, cfg.s_grid, quad,
                     {cfg.mc_samples, cfg.walk_samples, 200, cfg.seed})) {
    save_json(fs::path("bounds") / file, to_json(rep));
    bound_summary.push_back({{"file", "bounds/" + file}, {"status", rep.passed ? "pass" : "fail"},
                             {"margin", rep.margin}});
    res.bounds_ok = res.bounds_ok && rep.passed;
    // File names end in _t<i>.json or _s<i>.json.
    const std::size_t cut = file.rfind('_');
    const std::string var = file.substr(cut + 1, 1);
    const std::size_t idx = std::stoul(file.substr(cut + 2));
    bounds_table.row() << rep.name << var << (var == "s" ? cfg.s_grid.at(idx) : cfg.t_grid.at(idx))
                       << rep.bound_value << rep.max_achieved << rep.margin
                       << std::string(rep.passed ? "1" : "0");
  }
  save_csv("bounds.csv", bounds_table);

  // Invariants of the truncated measures nu_R: exact series when the kernel
  // route is the series, spectral quadrature otherwise.
  CsvWriter trunc({"R", "t", "total_rate", "return", "collision", "energy", "method"});
  for (double radius : cfg.trunc_radii) {
    const JumpMeasure nu_r = truncate_nu(m.space, m.nu, radius);
    if (inv.kernel_route == "series") {
      const auto ks = heat_series_multi(nu_r, cfg.t_grid, 1e-12);
      for (std::size_t i = 0; i < cfg.t_grid.size(); ++i)
        trunc.row() << radius << cfg.t_grid[i] << nu_r.total_rate() << ks[i].at(zero_point(m.space.rank()))
                    << sum_of_squares(ks[i].masses) << energy_from_kernel(ks[i], nu_r) << "series";
    } else {
      const QuadResult r = spectral_invariants(make_symbol(nu_r), cfg.t_grid, {}, quad);
      for (std::size_t i = 0; i < cfg.t_grid.size(); ++i)
        trunc.row() << radius << cfg.t_grid[i] << nu_r.total_rate() << r.values[3 * i] << r.values[3 * i + 1]
                    << r.values[3 * i + 2] << "quadrature";
    }
  }
  save_csv("truncation.csv", trunc);

  json files = json::array();
  for (const auto& f : res.files) files.push_back(f.generic_string());
  files.push_back("manifest.json");
  res.manifest = {{"version", kVersion},
                  {"seed", cfg.seed},
                  {"graph_a", cfg.graph_a.string()},
                  {"graph_b", cfg.graph_b.string()},
                  {"profile", profile_to_json(cfg.profile)["profile"]},
                  {"t_grid", cfg.t_grid},
                  {"s_grid", cfg.s_grid},
                  {"trunc_radii", cfg.trunc_radii},
                  {"rank", m.space.rank()},
                  {"total_rate", m.nu.total_rate()},
                  {"vpd_mass", mass(m.space, m.vpd)},
                  {"quadrature", quad.describe()},
                  {"kernel_route", inv.kernel_route},
                  {"resolvent_route", inv.resolvent_route},
                  {"walk_samples", cfg.walk_samples},
                  {"cross_checks", cross_check_table(inv)},
                  {"cross_checks_ok", res.cross_checks_ok},
                  {"max_discrepancy", inv.max_discrepancy()},
                  {"bounds", bound_summary},
                  {"bounds_ok", res.bounds_ok},
                  {"files", files}};
  write_json(out / "manifest.json", res.manifest);
  res.files.push_back("manifest.json");
  return res;
}

}  // namespace vpdheat
