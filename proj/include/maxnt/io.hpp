#ifndef MAXNT_IO_HPP
#define MAXNT_IO_HPP

// JSON and CSV serialization. JSON layouts:
//   scenario:     {"region": {...}, "seed": u64, "gateway": bool, "nodes": [[x, y], ...],
//                  "sensing_range_km": r | null, "noise_factor": eta, "edges": [[i, j, d], ...]}
//   localization: {"coords": [[x, y] | null, ...], "component": [...], "rms_km": r | null, ...}
//   topology:     {"n": n, "edges": [{"i", "j", "d_km", "snr_ij_db", "snr_ji_db"}],
//                  "powers_dbm": [p | null], "trace": [...], "iterations": k, "converged": b}
// All lengths are km; null encodes an infinite or unknown value.

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"
#include "maxnt/error.hpp"
#include "maxnt/metrics.hpp"
#include "maxnt/rigidity.hpp"
#include "maxnt/scenario.hpp"
#include "maxnt/sync.hpp"
#include "maxnt/topo.hpp"

namespace maxnt::io {

using Json = nlohmann::json;

inline Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline double number_or(const Json& j, double fallback) { return j.is_number() ? j.get<double>() : fallback; }

inline Json region_to_json(const Region& r) {
  if (const auto* a = std::get_if<Annulus>(&r))
    return {{"shape", "annulus"},
            {"center", {a->center.x, a->center.y}},
            {"inner_km", a->inner_km},
            {"outer_km", a->outer_km}};
  const auto& rect = std::get<Rectangle>(r);
  return {{"shape", "rectangle"}, {"width_km", rect.width_km}, {"height_km", rect.height_km}};
}

inline Region region_from_json(const Json& j) {
  const auto shape = j.at("shape").get<std::string>();
  if (shape == "annulus") {
    Annulus a;
    if (j.contains("center")) a.center = {j["center"].at(0).get<double>(), j["center"].at(1).get<double>()};
    a.inner_km = j.at("inner_km").get<double>();
    a.outer_km = j.at("outer_km").get<double>();
    return a;
  }
  if (shape == "rectangle") return Rectangle{j.at("width_km").get<double>(), j.at("height_km").get<double>()};
  throw Error(ErrorCode::InvalidRegion, "unknown region shape '" + shape + "'");
}

inline Json scenario_to_json(const Deployment& dep, const MeasurementGraph* mg = nullptr) {
  Json nodes = Json::array();
  for (const auto& p : dep.positions) nodes.push_back({p.x, p.y});
  Json out{{"region", region_to_json(dep.region)},
           {"seed", dep.seed},
           {"gateway", dep.has_gateway},
           {"node_count", dep.node_count},
           {"nodes", nodes}};
  if (mg) {
    Json edges = Json::array();
    for (const auto& e : mg->edges) edges.push_back({e.i, e.j, e.d});
    out["sensing_range_km"] = finite_or_null(mg->sensing_range);
    out["noise_factor"] = mg->noise_factor;
    out["edges"] = edges;
  }
  return out;
}

inline Deployment deployment_from_json(const Json& j) {
  Deployment dep;
  dep.region = region_from_json(j.at("region"));
  dep.seed = j.value("seed", std::uint64_t{0});
  dep.has_gateway = j.value("gateway", false);
  for (const auto& p : j.at("nodes")) dep.positions.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  dep.node_count = static_cast<int>(dep.positions.size());
  return dep;
}

/// Measurement graph stored alongside a deployment; missing edges mean none
/// were measured.
inline MeasurementGraph measurements_from_json(const Json& j) {
  MeasurementGraph mg;
  mg.node_count = j.contains("node_count") ? j["node_count"].get<int>() : static_cast<int>(j.at("nodes").size());
  mg.sensing_range = j.contains("sensing_range_km") ? number_or(j["sensing_range_km"], std::numeric_limits<double>::infinity())
                                                    : std::numeric_limits<double>::infinity();
  mg.noise_factor = j.value("noise_factor", 0.0);
  if (j.contains("edges")) {
    for (const auto& e : j["edges"]) {
      Measurement m{e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<double>()};
      if (m.i > m.j) std::swap(m.i, m.j);
      if (m.i < 0 || m.j >= mg.node_count || m.i == m.j)
        throw Error(ErrorCode::InvalidArgument, "edge endpoint out of range");
      if (!(m.d > 0.0)) throw Error(ErrorCode::ZeroDistance, "measured distance must be positive");
      mg.edges.push_back(m);
    }
  }
  return mg;
}

inline Json patchset_to_json(const PatchSet& set) {
  Json patches = Json::array();
  for (const auto& p : set.patches) patches.push_back({{"patch_id", p.patch_id}, {"members", p.members}});
  Json adjacency = Json::array();
  for (const auto& [k, l] : set.adjacency) adjacency.push_back({k, l});
  return {{"patches", patches}, {"adjacency", adjacency}, {"unlocalizable", set.unlocalizable}};
}

inline Json localization_to_json(const LocalizationResult& res) {
  Json coords = Json::array();
  for (const auto& c : res.coords) coords.push_back(c ? Json{c->x, c->y} : Json(nullptr));
  Json errors = Json::array();
  for (double e : res.node_error) errors.push_back(finite_or_null(e));
  Json stress = Json::array();
  for (double s : res.patch_stress) stress.push_back(finite_or_null(s));
  return {{"node_count", res.node_count},
          {"coords", coords},
          {"component", res.component},
          {"primary_component", res.primary_component},
          {"component_count", res.sync.component_count},
          {"rms_km", finite_or_null(res.rms_km)},
          {"node_error_km", errors},
          {"patch_stress", stress},
          {"patchset", patchset_to_json(res.patches)}};
}

inline Json topology_to_json(const Topology& t) {
  Json edges = Json::array();
  for (const auto& e : t.edges)
    edges.push_back({{"i", e.i}, {"j", e.j}, {"d_km", e.d}, {"snr_ij_db", finite_or_null(e.snr_ij)},
                     {"snr_ji_db", finite_or_null(e.snr_ji)}});
  Json powers = Json::array();
  for (double p : t.powers.p_t_dbm) powers.push_back(finite_or_null(p));
  Json trace = Json::array();
  for (const auto& r : t.trace)
    trace.push_back({{"iteration", r.iteration}, {"gap_db", r.gap_db}, {"delta", r.delta},
                     {"mean_snr_db", r.mean_snr_db}, {"admitted", r.admitted}, {"edges", r.edges}});
  return {{"n", t.n},       {"edges", edges},         {"powers_dbm", powers}, {"trace", trace},
          {"iterations", t.iterations}, {"converged", t.converged}, {"notes", t.notes}};
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::IoError, "'" + path + "': " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// reports.csv

inline constexpr const char* kReportHeader =
    "scenario_id,seed,algo,beta_db,avg_degree,throughput_total_bps,throughput_per_link_bps,rms_km,iterations,"
    "wall_ms,status";

/// Shortest decimal form that parses back to the same double; "nan"/"inf"
/// for non-finite values.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw Error(ErrorCode::IoError, "malformed number '" + s + "'");
  return v;
}

/// Status and id fields must not break the CSV framing.
inline std::string csv_safe(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
  return s;
}

inline std::string report_row(const RunReport& r) {
  std::ostringstream os;
  os << csv_safe(r.scenario_id) << ',' << r.seed << ',' << csv_safe(r.algo) << ',' << format_double(r.beta_db) << ','
     << format_double(r.avg_node_degree) << ',' << format_double(r.throughput_total) << ','
     << format_double(r.throughput_per_link) << ',' << format_double(r.localization_rms_km) << ',' << r.iterations
     << ',' << format_double(r.wall_time_ms) << ',' << csv_safe(r.status);
  return os.str();
}

inline void write_reports_csv(std::ostream& os, const std::vector<RunReport>& reports) {
  os << kReportHeader << '\n';
  for (const auto& r : reports) os << report_row(r) << '\n';
}

inline std::vector<RunReport> parse_reports_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kReportHeader)
    throw Error(ErrorCode::IoError, "reports CSV header mismatch");
  std::vector<RunReport> out;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 11)
      throw Error(ErrorCode::IoError, "reports CSV line " + std::to_string(lineno) + ": expected 11 fields");
    try {
      RunReport r;
      r.scenario_id = f[0];
      r.seed = std::stoull(f[1]);
      r.algo = f[2];
      r.beta_db = parse_double(f[3]);
      r.avg_node_degree = parse_double(f[4]);
      r.throughput_total = parse_double(f[5]);
      r.throughput_per_link = parse_double(f[6]);
      r.localization_rms_km = parse_double(f[7]);
      r.iterations = std::stoi(f[8]);
      r.wall_time_ms = parse_double(f[9]);
      r.status = f[10];
      out.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::IoError, "reports CSV line " + std::to_string(lineno) + ": malformed integer");
    }
  }
  return out;
}

inline void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
  os << "scenario_id,algo,beta_db,runs,avg_degree_mean,avg_degree_std,throughput_total_mean,throughput_total_std,"
        "throughput_per_link_mean,throughput_per_link_std,rms_km_mean,iterations_mean\n";
  for (const auto& r : rows)
    os << csv_safe(r.scenario_id) << ',' << csv_safe(r.algo) << ',' << format_double(r.beta_db) << ',' << r.runs
       << ',' << format_double(r.avg_node_degree.mean) << ',' << format_double(r.avg_node_degree.stddev) << ','
       << format_double(r.throughput_total.mean) << ',' << format_double(r.throughput_total.stddev) << ','
       << format_double(r.throughput_per_link.mean) << ',' << format_double(r.throughput_per_link.stddev) << ','
       << format_double(r.localization_rms_km.mean) << ',' << format_double(r.iterations.mean) << '\n';
}

/// Per-patch majorization trajectory, one row per recorded sweep.
inline void write_stress_csv(std::ostream& os, const std::vector<std::pair<int, std::vector<double>>>& trajectories) {
  os << "patch_id,sweep,stress\n";
  for (const auto& [patch, stress] : trajectories)
    for (std::size_t k = 0; k < stress.size(); ++k) os << patch << ',' << k << ',' << format_double(stress[k]) << '\n';
}

}  // namespace maxnt::io

#endif  // MAXNT_IO_HPP
