#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <locale>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "vpdheat/bounds.hpp"
#include "vpdheat/diagram.hpp"
#include "vpdheat/levy.hpp"
#include "vpdheat/mixtures.hpp"
#include "vpdheat/quadrature.hpp"
#include "vpdheat/spectral.hpp"

namespace vpdheat {

using json = nlohmann::json;

// --- files -------------------------------------------------------------

inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail("parse error in " + path.string() + ": " + e.what());
  }
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  require(static_cast<bool>(out), "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

/// 17 significant digits, '.' separator, no locale.
inline std::string format_real(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(17) << v;
  return os.str();
}

/// Minimal CSV writer; cells are strings or reals.
class CsvWriter {
public:
  explicit CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

  CsvWriter& row() {
    rows_.emplace_back();
    return *this;
  }
  CsvWriter& operator<<(double v) {
    rows_.back().push_back(format_real(v));
    return *this;
  }
  CsvWriter& operator<<(const std::string& s) {
    rows_.back().push_back(s);
    return *this;
  }

  std::string str() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
      out += '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
  }

  void save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    require(static_cast<bool>(out), "cannot write " + path.string());
    out << str();
  }

private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Parses CSV text written by CsvWriter: header plus rows of cells.
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    out.push_back(std::move(cells));
  }
  return out;
}

inline double parse_real(const std::string& s) {
  std::istringstream is(s);
  is.imbue(std::locale::classic());
  double v = 0.0;
  is >> v;
  require(!is.fail(), "not a number: '" + s + "'");
  return v;
}

// --- diagrams, graphs, elements ------------------------------------------

/// {"points": [[birth, death, multiplicity], ...]}; multiplicities may be
/// negative only when `signed_ok`.
inline std::vector<DiagramPoint> diagram_from_json(const json& j, bool signed_ok = false) {
  require(j.is_object() && j.contains("points") && j["points"].is_array(),
          "diagram JSON needs a \"points\" array");
  std::vector<DiagramPoint> out;
  for (const auto& row : j["points"]) {
    require(row.is_array() && row.size() == 3, "diagram point must be [birth, death, multiplicity]");
    require(row[0].is_number() && row[1].is_number() && row[2].is_number_integer(),
            "diagram point entries must be numbers with an integer multiplicity");
    DiagramPoint p{{row[0].get<double>(), row[1].get<double>()}, row[2].get<int>()};
    require(std::isfinite(p.point.birth) && std::isfinite(p.point.death),
            "diagram point must be finite (essential classes are not supported)");
    require(p.point.birth < p.point.death, "diagram point needs birth < death");
    require(signed_ok ? p.multiplicity != 0 : p.multiplicity > 0,
            signed_ok ? "multiplicity must be nonzero" : "multiplicity must be a positive integer");
    out.push_back(p);
  }
  return out;
}

inline json diagram_to_json(const std::vector<DiagramPoint>& pts) {
  json arr = json::array();
  for (const auto& p : pts) arr.push_back({p.point.birth, p.point.death, p.multiplicity});
  return json{{"points", arr}};
}

inline WeightedGraph graph_from_json(const json& j) {
  require(j.is_object() && j.contains("vertices") && j.contains("edges"),
          "graph JSON needs \"vertices\" and \"edges\"");
  WeightedGraph g;
  g.vertex_count = j["vertices"].get<int>();
  for (const auto& e : j["edges"]) {
    require(e.is_array() && e.size() == 3, "graph edge must be [u, v, w]");
    int u = e[0].get<int>(), v = e[1].get<int>();
    if (u > v) std::swap(u, v);
    g.edges.push_back({u, v, e[2].get<double>()});
  }
  validate(g);
  return g;
}

inline json graph_to_json(const WeightedGraph& g) {
  json edges = json::array();
  for (const auto& e : g.edges) edges.push_back({e.u, e.v, e.weight});
  return json{{"vertices", g.vertex_count}, {"edges", edges}};
}

/// Element list: {"elements": [{"points": ...}, ...]}.
inline std::vector<std::vector<DiagramPoint>> elements_from_json(const json& j) {
  require(j.is_object() && j.contains("elements") && j["elements"].is_array(),
          "elements JSON needs an \"elements\" array");
  std::vector<std::vector<DiagramPoint>> out;
  for (const auto& e : j["elements"]) out.push_back(diagram_from_json(e, true));
  return out;
}

// --- configuration fragments ----------------------------------------------

/// {"profile": {"kind": "exp", "alpha": 1.0}} or the inner object alone.
/// Kinds: exp, gauss, power (c, p, r0), table (rows [[r, psi], ...]).
inline Profile profile_from_json(const json& j) {
  const json& p = j.contains("profile") ? j["profile"] : j;
  require(p.is_object() && p.contains("kind"), "profile JSON needs a \"kind\"");
  const auto kind = p["kind"].get<std::string>();
  Profile out;
  if (kind == "exp" || kind == "exponential") {
    out = Profile::exponential(p.value("alpha", 1.0));
  } else if (kind == "gauss" || kind == "gaussian") {
    out = Profile::gaussian(p.value("alpha", 1.0));
  } else if (kind == "power") {
    out = Profile::power(p.value("c", 1.0), p.value("p", 1.0), p.value("r0", 0.0));
  } else if (kind == "table") {
    std::vector<std::pair<double, double>> rows;
    for (const auto& r : p.at("rows")) rows.emplace_back(r.at(0).get<double>(), r.at(1).get<double>());
    out = Profile::tabulated(std::move(rows));
  } else {
    fail("unknown profile kind '" + kind + "'");
  }
  out.validate();
  return out;
}

inline json profile_to_json(const Profile& p) {
  json o;
  switch (p.kind) {
    case Profile::Kind::exponential: o = {{"kind", "exp"}, {"alpha", p.alpha}}; break;
    case Profile::Kind::gaussian: o = {{"kind", "gauss"}, {"alpha", p.alpha}}; break;
    case Profile::Kind::power: o = {{"kind", "power"}, {"c", p.scale}, {"p", p.exponent}, {"r0", p.cutoff}}; break;
    case Profile::Kind::table: {
      json rows = json::array();
      for (const auto& [r, v] : p.table) rows.push_back({r, v});
      o = {{"kind", "table"}, {"rows", rows}};
      break;
    }
  }
  return json{{"profile", o}};
}

inline std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

/// Profile from a CLI string: "exp:alpha", "gauss:alpha", "power:c:p[:r0]",
/// or a path to a JSON file.
inline Profile parse_profile(const std::string& s) {
  const auto parts = split_on(s, ':');
  Profile p;
  if (parts[0] == "exp" && parts.size() == 2) {
    p = Profile::exponential(parse_real(parts[1]));
  } else if (parts[0] == "gauss" && parts.size() == 2) {
    p = Profile::gaussian(parse_real(parts[1]));
  } else if (parts[0] == "power" && (parts.size() == 3 || parts.size() == 4)) {
    p = Profile::power(parse_real(parts[1]), parse_real(parts[2]),
                       parts.size() == 4 ? parse_real(parts[3]) : 0.0);
  } else {
    return profile_from_json(read_json(s));
  }
  p.validate();
  return p;
}

/// "start:stop:steps" as an increasing positive grid of `steps` points.
inline std::vector<double> parse_grid(const std::string& s) {
  const auto parts = split_on(s, ':');
  require(parts.size() == 3, "grid must be start:stop:steps");
  const double a = parse_real(parts[0]), b = parse_real(parts[1]);
  const double steps = parse_real(parts[2]);
  require(steps >= 2 && std::floor(steps) == steps, "grid needs an integer steps >= 2");
  require(a > 0.0 && b > a, "grid needs 0 < start < stop");
  const auto n = static_cast<std::size_t>(steps);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

/// "grid:N" or "mc:S:seed".
inline QuadratureSpec parse_quadrature(const std::string& s) {
  const auto parts = split_on(s, ':');
  QuadratureSpec q;
  if (parts[0] == "grid" && parts.size() == 2) {
    q = QuadratureSpec::grid(static_cast<std::size_t>(parse_real(parts[1])));
  } else if (parts[0] == "mc" && parts.size() == 3) {
    q = QuadratureSpec::monte_carlo(static_cast<std::size_t>(parse_real(parts[1])),
                                    static_cast<std::uint64_t>(parse_real(parts[2])));
  } else {
    fail("quadrature must be grid:N or mc:S:seed");
  }
  q.validate();
  return q;
}

/// "u:w,u:w,...".
inline MixtureMeasure parse_mixture(const std::string& s) {
  MixtureMeasure eta;
  for (const auto& atom : split_on(s, ',')) {
    const auto uw = split_on(atom, ':');
    require(uw.size() == 2, "mixture atom must be u:w");
    eta.atoms.push_back({parse_real(uw[0]), parse_real(uw[1])});
  }
  eta.validate();
  return eta;
}

// --- reports ---------------------------------------------------------------

inline json to_json(const BoundReport& r) {
  json w = json::array();
  for (const auto& x : r.witnesses) w.push_back({{"input", x.input}, {"ratio", x.ratio}});
  json d = json::object();
  for (const auto& [k, v] : r.details) d[k] = v;
  return json{{"name", r.name},         {"bound_value", r.bound_value},
              {"witnesses", w},         {"max_achieved", r.max_achieved},
              {"margin", r.margin},     {"tol", r.tol},
              {"status", r.passed ? "pass" : "fail"}, {"details", d}};
}

inline json to_json(const MajorizationReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks)
    checks.push_back({{"name", c.name}, {"status", c.passed ? "pass" : "fail"}, {"margin", c.margin}});
  auto kernel = [](const MixtureKernelReport& k) {
    return json{{"A_eta", k.A_eta}, {"A_finite", k.A_finite}, {"B_eta", k.B_eta},
                {"A_kernel", k.A_kernel}, {"B_kernel", k.B_kernel}};
  };
  return json{{"convex_order", r.order.holds},
              {"checks", checks},
              {"psd_min_eigenvalue", r.psd_min_eigenvalue},
              {"psd_floor", r.psd_floor},
              {"eta1", kernel(r.k1)},
              {"eta2", kernel(r.k2)},
              {"status", r.passed() ? "pass" : "fail"}};
}

inline CsvWriter invariants_csv(const InvariantReport& rep) {
  CsvWriter csv({"t", "return", "collision", "energy", "scale"});
  for (const auto& r : rep.rows) csv.row() << r.t << r.ret << r.collision << r.energy << r.scale;
  return csv;
}

inline CsvWriter resolvent_csv(const InvariantReport& rep) {
  CsvWriter csv({"s", "resolvent"});
  for (const auto& r : rep.resolvent) csv.row() << r.s << r.spectral;
  return csv;
}

}  // namespace vpdheat
