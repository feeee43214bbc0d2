// vpdheat: command-line front end.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "vpdheat/bounds.hpp"
#include "vpdheat/io.hpp"
#include "vpdheat/mixtures.hpp"
#include "vpdheat/montecarlo.hpp"
#include "vpdheat/pipeline.hpp"

namespace {

using namespace vpdheat;
namespace fs = std::filesystem;

constexpr int kExitValidation = 2;
constexpr int kExitCrossCheck = 3;

// Where a model comes from: two graphs, two diagrams, or a single VPD file.
struct ModelInput {
  std::string graph_a, graph_b, a, b, vpd;
  std::string profile = "exp:1";

  void attach(CLI::App* app) {
    app->add_option("--graph-a", graph_a, "first weighted graph (JSON)");
    app->add_option("--graph-b", graph_b, "second weighted graph (JSON)");
    app->add_option("--a", a, "first diagram (JSON)");
    app->add_option("--b", b, "second diagram (JSON)");
    app->add_option("--vpd", vpd, "virtual diagram (JSON, signed multiplicities)");
    app->add_option("--profile", profile, "exp:alpha | gauss:alpha | power:c:p[:r0] | JSON file");
  }

  Model load() const {
    const Profile psi = parse_profile(profile);
    if (!graph_a.empty() || !graph_b.empty()) {
      require(!graph_a.empty() && !graph_b.empty(), "give both --graph-a and --graph-b");
      return model_from_graphs(graph_a, graph_b, psi);
    }
    if (!a.empty() || !b.empty()) {
      require(!a.empty() && !b.empty(), "give both --a and --b");
      return build_model(diagram_from_json(read_json(a)), diagram_from_json(read_json(b)), psi);
    }
    require(!vpd.empty(), "no input: use --graph-a/--graph-b, --a/--b or --vpd");
    std::vector<DiagramPoint> pos, neg;
    for (auto p : diagram_from_json(read_json(vpd), true)) {
      if (p.multiplicity > 0) {
        pos.push_back(p);
      } else {
        p.multiplicity = -p.multiplicity;
        neg.push_back(p);
      }
    }
    return build_model(pos, neg, psi);
  }
};

void emit(const json& j, const std::string& out) {
  if (out.empty())
    std::cout << j.dump(2) << '\n';
  else
    write_json(out, j);
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& x : split_on(s, ',')) out.push_back(parse_real(x));
  return out;
}

std::vector<DiagramPoint> signed_points(const std::string& path) {
  return diagram_from_json(read_json(path), true);
}

int run(int argc, char** argv) {
  CLI::App app{"Heat semigroup and random walks on virtual persistence diagram groups"};
  app.require_subcommand(1);
  int status = 0;

  // persist
  std::string graph_path, out;
  auto* persist = app.add_subcommand("persist", "H0 persistence diagram of a weighted graph");
  persist->add_option("--graph", graph_path, "weighted graph (JSON)")->required();
  persist->add_option("--out", out, "output file (default stdout)");
  persist->callback([&] { emit(diagram_to_json(h0_persistence(graph_from_json(read_json(graph_path)))), out); });

  // vpd
  std::string diag_a, diag_b;
  auto* vpd = app.add_subcommand("vpd", "virtual diagram a - b");
  vpd->add_option("--a", diag_a, "first diagram (JSON)")->required();
  vpd->add_option("--b", diag_b, "second diagram (JSON)")->required();
  vpd->add_option("--out", out, "output file (default stdout)");
  vpd->callback([&] {
    const auto a = diagram_from_json(read_json(diag_a)), b = diagram_from_json(read_json(diag_b));
    const GroundSpace space = ground_space_of({a, b});
    emit(diagram_to_json(points_of(space, element_of(space, a) - element_of(space, b))), out);
  });

  // rho
  auto* rho_cmd = app.add_subcommand("rho", "transport distance between two (virtual) diagrams");
  rho_cmd->add_option("--a", diag_a, "first diagram or VPD (JSON)")->required();
  rho_cmd->add_option("--b", diag_b, "second diagram or VPD (JSON)")->required();
  rho_cmd->callback([&] {
    const auto a = signed_points(diag_a), b = signed_points(diag_b);
    const GroundSpace space = ground_space_of({a, b});
    std::cout << format_real(rho(space, element_of(space, a), element_of(space, b))) << '\n';
  });

  // symbol
  ModelInput sym_in;
  std::string theta;
  auto* symbol = app.add_subcommand("symbol", "jump measure summary and symbol evaluation");
  sym_in.attach(symbol);
  symbol->add_option("--theta", theta, "comma-separated angles, one per generator");
  symbol->callback([&] {
    const Model m = sym_in.load();
    json j{{"rank", m.space.rank()}, {"labels", m.space.labels()}, {"total_rate", m.nu.total_rate()},
           {"jump_pairs", m.nu.pairs.size()}, {"upper_bound", m.sym.upper_bound()}};
    if (!theta.empty()) j["lambda"] = symbol_eval(m.sym, Character(parse_list(theta)));
    emit(j, "");
  });

  // heat
  ModelInput heat_in;
  double t = 0.5, tol = 1e-12;
  std::string quad_spec = "grid:64", at;
  auto* heat = app.add_subcommand("heat", "heat kernel by the series and Fourier routes");
  heat_in.attach(heat);
  heat->add_option("--t", t, "time")->required();
  heat->add_option("--tol", tol, "series truncation tolerance");
  heat->add_option("--quad", quad_spec, "grid:N | mc:S:seed");
  heat->add_option("--at", at, "comma-separated lattice point (default 0)");
  heat->add_option("--kernel-out", out, "write the series kernel as CSV");
  heat->callback([&] {
    const Model m = heat_in.load();
    const HeatKernel k = heat_series(m.nu, t, tol);
    Point g = zero_point(m.space.rank());
    if (!at.empty()) {
      const auto v = parse_list(at);
      require(v.size() == g.size(), "--at must have one coordinate per generator");
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = static_cast<int>(v[i]);
    }
    const SpectralValue f = heat_fourier(m.sym, g, t, parse_quadrature(quad_spec));
    const double series = k.at(g);
    const double tol_cross = f.monte_carlo ? 3.0 * f.error + k.deficit : 1e-8;
    json j{{"t", t}, {"point", g}, {"series", series}, {"fourier", f.value},
           {"fourier_error", f.error}, {"deficit", k.deficit}, {"terms", k.terms},
           {"support", k.masses.size()}, {"discrepancy", std::abs(series - f.value)},
           {"tolerance", tol_cross}};
    emit(j, "");
    if (!out.empty()) {
      std::vector<std::string> header;
      for (std::size_t i = 0; i < g.size(); ++i) header.push_back("x" + std::to_string(i));
      header.push_back("mass");
      CsvWriter csv(header);
      std::map<Point, double> sorted(k.masses.begin(), k.masses.end());
      for (const auto& [h, p] : sorted) {
        auto& r = csv.row();
        for (int c : h) r << static_cast<double>(c);
        r << p;
      }
      csv.save(out);
    }
    if (std::abs(series - f.value) > tol_cross) status = kExitCrossCheck;
  });

  // invariants
  ModelInput inv_in;
  std::string t_grid = "0.25:2:8", s_grid = "0.5:2:4", out_dir = "out";
  std::optional<std::string> quad_opt;
  auto* inv = app.add_subcommand("invariants", "heat invariants by both routes");
  inv_in.attach(inv);
  inv->add_option("--t-grid", t_grid, "start:stop:steps");
  inv->add_option("--s-grid", s_grid, "start:stop:steps");
  inv->add_option("--quad", quad_opt, "grid:N | mc:S:seed (default: grid up to rank 4)");
  inv->add_option("--out-dir", out_dir, "output directory");
  inv->callback([&] {
    const Model m = inv_in.load();
    const QuadratureSpec q = pipeline_quadrature(
        quad_opt ? std::optional(parse_quadrature(*quad_opt)) : std::nullopt, m.space.rank(), 2000000, 1);
    const InvariantReport rep = invariants(m.sym, parse_grid(t_grid), parse_grid(s_grid), q);
    invariants_csv(rep).save(fs::path(out_dir) / "invariants.csv");
    resolvent_csv(rep).save(fs::path(out_dir) / "resolvent.csv");
    emit(json{{"quadrature", q.describe()},
              {"kernel_route", rep.kernel_route},
              {"resolvent_route", rep.resolvent_route},
              {"cross_checks", cross_check_table(rep)}, {"ok", rep.ok()}},
         "");
    if (!rep.ok()) status = kExitCrossCheck;
  });

  // bounds
  ModelInput bnd_in;
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
  auto* bnd = app.add_subcommand("bounds", "Lipschitz, Sobolev, mass-tail and covering reports");
  bnd_in.attach(bnd);
  bnd->add_option("--t-grid", t_grid, "start:stop:steps");
  bnd->add_option("--s-grid", s_grid, "start:stop:steps");
  bnd->add_option("--quad", quad_opt, "grid:N | mc:S:seed");
  bnd->add_option("--samples", samples, "Monte Carlo walks per mass-tail report");
  bnd->add_option("--seed", seed, "random seed");
  bnd->add_option("--out-dir", out_dir, "output directory");
  bnd->callback([&] {
    const Model m = bnd_in.load();
    const QuadratureSpec q = pipeline_quadrature(
        quad_opt ? std::optional(parse_quadrature(*quad_opt)) : std::nullopt, m.space.rank(), 2000000, seed);
    const auto tg = parse_grid(t_grid), sg = parse_grid(s_grid);
    const InvariantReport rep = invariants(m.sym, tg, sg, q);
    bool ok = true;
    for (const auto& [file, r] : bound_reports(m, rep, tg, sg, q, {samples, 1000000, 200, seed})) {
      write_json(fs::path(out_dir) / "bounds" / file, to_json(r));
      std::cout << file << ' ' << (r.passed ? "pass" : "fail") << " margin=" << format_real(r.margin) << '\n';
      ok = ok && r.passed;
    }
    if (!ok) status = kExitCrossCheck;
  });

  // mixture
  std::string eta1_s, eta2_s, elements_path;
  auto* mix = app.add_subcommand("mixture", "heat-scale majorization checks");
  mix->add_option("--eta1", eta1_s, "u:w,u:w,...")->required();
  mix->add_option("--eta2", eta2_s, "u:w,u:w,...")->required();
  mix->add_option("--elements", elements_path, "VPD elements (JSON {\"elements\": [...]})")->required();
  mix->add_option("--profile", sym_in.profile, "jump profile");
  mix->add_option("--quad", quad_spec, "grid:N | mc:S:seed");
  mix->add_option("--out", out, "output file (default stdout)");
  mix->callback([&] {
    const auto elems = elements_from_json(read_json(elements_path));
    const GroundSpace space = ground_space_of(elems);
    std::vector<Point> pts;
    for (const auto& e : elems) pts.push_back(element_of(space, e));
    Matrix rho_table(pts.size(), std::vector<double>(pts.size(), 0.0));
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = 0; j < pts.size(); ++j) rho_table[i][j] = rho(space, pts[i], pts[j]);
    const Symbol sym = make_symbol(build_nu(space, parse_profile(sym_in.profile)));
    const auto rep = majorization_suite(sym, parse_mixture(eta1_s), parse_mixture(eta2_s), pts, rho_table,
                                        parse_quadrature(quad_spec));
    emit(to_json(rep), out);
    if (!rep.passed()) status = kExitCrossCheck;
  });

  // simulate
  ModelInput sim_in;
  double radius = 1.0;
  std::string hist_out;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo estimators against spectral references");
  sim_in.attach(sim);
  sim->add_option("--t", t, "time")->required();
  sim->add_option("--n", samples, "number of walks");
  sim->add_option("--seed", seed, "random seed");
  sim->add_option("--R", radius, "mass-tail radius");
  sim->add_option("--out", out, "CSV output (default stdout)");
  sim->add_option("--histogram", hist_out, "endpoint histogram CSV");
  sim->callback([&] {
    const Model m = sim_in.load();
    CsvWriter csv({"quantity", "t", "estimate", "std_error", "reference", "z"});
    auto add = [&](const std::string& name, const EstimatorResult& r) {
      csv.row() << name << t << r.estimate << r.std_error << r.reference << r.z_score;
    };
    const std::size_t even = samples - samples % 2;
    if (m.space.rank() <= QuadratureSpec{}.max_grid_rank) {
      add("return", estimate_return(m.nu, t, samples, seed));
      add("collision", estimate_collision(m.nu, t, even, seed));
      add("mass_tail", estimate_mass_tail(m.space, m.nu, t, radius, samples, seed));
    } else {
      // No series kernel at this rank: spectral references for return and
      // collision, none for the mass tail.
      const QuadratureSpec q = pipeline_quadrature(std::nullopt, m.space.rank(), 2000000, seed);
      const QuadResult ref = spectral_invariants(m.sym, {t}, {}, q);
      add("return", sample_return(m.nu, t, samples, seed, ref.values[0]));
      add("collision", sample_collision(m.nu, t, even, seed, ref.values[1]));
      const EstimatorResult tail = sample_mass_tail(m.space, m.nu, t, radius, samples, seed, 0.0);
      csv.row() << "mass_tail" << t << tail.estimate << tail.std_error << "" << "";
    }
    if (out.empty())
      std::cout << csv.str();
    else
      csv.save(out);
    if (!hist_out.empty()) {
      std::vector<std::string> header;
      for (std::size_t i = 0; i < m.space.rank(); ++i) header.push_back("x" + std::to_string(i));
      header.push_back("count");
      CsvWriter h(header);
      for (const auto& [p, c] : endpoint_histogram(m.nu, t, samples, seed)) {
        auto& r = h.row();
        for (int v : p) r << static_cast<double>(v);
        r << static_cast<double>(c);
      }
      h.save(hist_out);
    }
  });

  // pipeline
  PipelineConfig cfg;
  std::string prof = "exp:1", radii;
  auto* pipe = app.add_subcommand("pipeline", "graphs to invariants and bounds, end to end");
  pipe->add_option("--graph-a", cfg.graph_a, "first weighted graph (JSON)")->required();
  pipe->add_option("--graph-b", cfg.graph_b, "second weighted graph (JSON)")->required();
  pipe->add_option("--profile", prof, "jump profile");
  pipe->add_option("--t-grid", t_grid, "start:stop:steps");
  pipe->add_option("--s-grid", s_grid, "start:stop:steps");
  pipe->add_option("--quad", quad_opt, "grid:N | mc:S:seed (default: grid up to rank 4)");
  pipe->add_option("--trunc-radii", radii, "comma-separated truncation radii");
  pipe->add_option("--samples", cfg.mc_samples, "Monte Carlo walks per mass-tail report");
  pipe->add_option("--walk-samples", cfg.walk_samples, "walks for the kernel side above rank 4");
  pipe->add_option("--seed", cfg.seed, "random seed");
  pipe->add_option("--out-dir", cfg.output_dir, "output directory");
  pipe->callback([&] {
    cfg.profile = parse_profile(prof);
    cfg.t_grid = parse_grid(t_grid);
    cfg.s_grid = parse_grid(s_grid);
    if (quad_opt) cfg.quadrature = parse_quadrature(*quad_opt);
    if (!radii.empty()) cfg.trunc_radii = parse_list(radii);
    const PipelineResult res = run_pipeline(cfg);
    std::cout << "wrote " << res.files.size() << " files to " << cfg.output_dir.string() << '\n'
              << "quadrature " << res.manifest["quadrature"].get<std::string>() << ", kernel route "
              << res.invariants.kernel_route << ", resolvent route " << res.invariants.resolvent_route
              << ", max discrepancy "
              << format_real(res.invariants.max_discrepancy()) << '\n'
              << "cross-checks " << (res.cross_checks_ok ? "ok" : "FAILED") << ", bounds "
              << (res.bounds_ok ? "ok" : "FAILED") << '\n';
    // Bound failures are findings recorded in the manifest, not cross-check failures.
    if (!res.cross_checks_ok) status = kExitCrossCheck;
  });

  // gen-graph
  int n = 20, k = 4, w_min = 1, w_max = 8;
  double p = 0.3;
  auto* gen = app.add_subcommand("gen-graph", "Watts–Strogatz graph with integer weights");
  gen->add_option("--n", n, "vertices");
  gen->add_option("--k", k, "ring neighbours (even)");
  gen->add_option("--p", p, "rewiring probability");
  gen->add_option("--w-min", w_min, "smallest weight");
  gen->add_option("--w-max", w_max, "largest weight");
  gen->add_option("--seed", seed, "random seed");
  gen->add_option("--out", out, "output file (default stdout)");
  gen->callback([&] { emit(graph_to_json(generate_ws_graph(n, k, p, w_min, w_max, seed)), out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const vpdheat::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.kind() == vpdheat::ErrorKind::cross_check ? kExitCrossCheck : kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
}
