#ifndef MAXNT_HARNESS_HPP
#define MAXNT_HARNESS_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "maxnt/error.hpp"
#include "maxnt/io.hpp"
#include "maxnt/metrics.hpp"
#include "maxnt/radio.hpp"
#include "maxnt/scenario.hpp"
#include "maxnt/sync.hpp"
#include "maxnt/topo.hpp"

namespace maxnt {

/// Raised for malformed experiment configs; carries the offending line (0 when
/// unknown) and field name.
class ConfigError : public Error {
 public:
  ConfigError(int line, std::string field, const std::string& message)
      : Error(ErrorCode::ConfigError, (line > 0 ? "line " + std::to_string(line) + ": " : std::string()) +
                                          (field.empty() ? std::string() : "field '" + field + "': ") + message),
        line_(line),
        field_(std::move(field)) {}
  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  int line_;
  std::string field_;
};

struct BetaSweep {
  double start{0.0};
  double stop{30.0};
  double step{2.5};

  std::vector<double> points() const {
    std::vector<double> out;
    for (int k = 0;; ++k) {
      const double b = start + k * step;
      if (b > stop + 1e-9 * std::max(1.0, std::abs(stop))) break;
      out.push_back(b);
    }
    return out;
  }
};

enum class Shape { Annulus, Rectangle };

struct ExperimentConfig {
  std::string name;  // scenario_id; derived from the shape when empty
  Shape shape{Shape::Annulus};
  int n{50};
  double inner_km{0.2};
  double outer_km{1.0};
  double width_km{4.0};
  double height_km{4.0};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::optional<double> sensing_range_km;  // derived from radio params when absent
  double noise_factor{0.0};
  RadioParams radio{};
  std::vector<std::string> algorithms{"maxnttop", "lmst", "bruteforce"};
  std::optional<BetaSweep> sweep;
  double eps{0.1};
  int max_iters{50};
  double bf_step_db{0.1};
  /// MaxNTtop merges sew localization patches (true) or start from single nodes.
  bool patch_frames{true};
  std::string out_dir{"results"};
  bool dump_topologies{true};
  bool record_timing{false};

  std::string scenario_id() const {
    if (!name.empty()) return name;
    return (shape == Shape::Annulus ? "annulus-" : "rectangle-") + std::to_string(n);
  }
  double sensing_range() const { return sensing_range_km.value_or(transmission_range_km(radio)); }
  std::vector<double> betas() const { return sweep ? sweep->points() : std::vector<double>{radio.beta_db}; }

  void validate() const {
    if (seeds.empty()) throw ConfigError(0, "seeds", "at least one seed is required");
    if (n < 1) throw ConfigError(0, "n", "node count must be >= 1");
    if (sweep && !(sweep->step > 0.0)) throw ConfigError(0, "beta_sweep", "step must be positive");
    if (sweep && sweep->stop < sweep->start) throw ConfigError(0, "beta_sweep", "stop must be >= start");
    if (!(eps > 0.0)) throw ConfigError(0, "eps", "must be positive");
    if (max_iters < 1) throw ConfigError(0, "max_iters", "must be >= 1");
    if (!(bf_step_db > 0.0)) throw ConfigError(0, "bf_step_db", "must be positive");
    if (sensing_range_km && !(*sensing_range_km > 0.0)) throw ConfigError(0, "sensing_range_km", "must be positive");
    if (!(noise_factor >= 0.0)) throw ConfigError(0, "noise_factor", "must be >= 0");
    if (algorithms.empty()) throw ConfigError(0, "algorithms", "at least one algorithm is required");
    for (const auto& a : algorithms)
      if (a != "maxnttop" && a != "lmst" && a != "bruteforce")
        throw ConfigError(0, "algorithms", "unknown algorithm '" + a + "'");
    try {
      radio.validate();
    } catch (const Error& e) {
      throw ConfigError(0, "radio", e.what());
    }
  }
};

namespace detail {

struct RawValue {
  std::string text;
  int line{0};
};

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string unquote(std::string s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) return s.substr(1, s.size() - 2);
  return s;
}

/// Splits "a, b, c" or "[a, b, c]" into trimmed, unquoted items.
inline std::vector<std::string> split_list(std::string s) {
  s = trim(s);
  if (s.size() >= 2 && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = unquote(trim(item));
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::map<std::string, RawValue> parse_key_values(const std::string& text) {
  std::map<std::string, RawValue> out;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    // Strip comments outside quotes.
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') continue;  // section headers are cosmetic
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(lineno, "", "expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(lineno, "", "empty key");
    if (out.count(key)) throw ConfigError(lineno, key, "duplicate key");
    out[key] = {unquote(trim(line.substr(eq + 1))), lineno};
  }
  return out;
}

inline std::map<std::string, RawValue> parse_json_values(const std::string& text) {
  io::Json j;
  try {
    j = io::Json::parse(text);
  } catch (const io::Json::exception& e) {
    throw ConfigError(0, "", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError(0, "", "JSON config must be an object");
  std::map<std::string, RawValue> out;
  for (const auto& [key, value] : j.items()) {
    std::string t;
    if (value.is_string()) {
      t = value.get<std::string>();
    } else if (value.is_array()) {
      for (std::size_t i = 0; i < value.size(); ++i) {
        if (i) t += ",";
        t += value[i].is_string() ? value[i].get<std::string>() : value[i].dump();
      }
    } else {
      t = value.dump();
    }
    out[key] = {t, 0};
  }
  return out;
}

inline double to_number(const std::string& key, const RawValue& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v.text, &pos);
    if (trim(v.text.substr(pos)).empty()) return d;
  } catch (const std::logic_error&) {
  }
  if (v.text == "inf" || v.text == "+inf") return std::numeric_limits<double>::infinity();
  throw ConfigError(v.line, key, "expected a number, got '" + v.text + "'");
}

inline bool to_bool(const std::string& key, const RawValue& v) {
  if (v.text == "true" || v.text == "1" || v.text == "yes") return true;
  if (v.text == "false" || v.text == "0" || v.text == "no") return false;
  throw ConfigError(v.line, key, "expected true or false");
}

}  // namespace detail

/// Builds a config from parsed key/value pairs; unknown keys are rejected.
inline ExperimentConfig config_from_values(const std::map<std::string, detail::RawValue>& values) {
  ExperimentConfig cfg;
  for (const auto& [key, v] : values) {
    auto num = [&] { return detail::to_number(key, v); };
    auto integer = [&] {
      const double d = num();
      if (d != std::floor(d) || std::abs(d) > 1e15) throw ConfigError(v.line, key, "expected an integer");
      return static_cast<long long>(d);
    };
    if (key == "name") cfg.name = v.text;
    else if (key == "shape") {
      if (v.text == "annulus") cfg.shape = Shape::Annulus;
      else if (v.text == "rectangle") cfg.shape = Shape::Rectangle;
      else throw ConfigError(v.line, key, "expected annulus or rectangle");
    } else if (key == "n") cfg.n = static_cast<int>(integer());
    else if (key == "inner_km") cfg.inner_km = num();
    else if (key == "outer_km") cfg.outer_km = num();
    else if (key == "width_km") cfg.width_km = num();
    else if (key == "height_km") cfg.height_km = num();
    else if (key == "seeds") {
      cfg.seeds.clear();
      for (const auto& item : detail::split_list(v.text)) {
        const auto dash = item.find('-', 1);
        detail::RawValue a{item.substr(0, dash), v.line};
        const long long lo = static_cast<long long>(detail::to_number(key, a));
        long long hi = lo;
        if (dash != std::string::npos) hi = static_cast<long long>(detail::to_number(key, {item.substr(dash + 1), v.line}));
        if (lo < 0 || hi < lo) throw ConfigError(v.line, key, "bad seed '" + item + "'");
        for (long long s = lo; s <= hi; ++s) cfg.seeds.push_back(static_cast<std::uint64_t>(s));
      }
    } else if (key == "sensing_range_km") {
      if (v.text != "auto" && v.text != "null") cfg.sensing_range_km = num();
    } else if (key == "noise_factor") cfg.noise_factor = num();
    else if (key == "algorithms") {
      cfg.algorithms = detail::split_list(v.text);
      for (const auto& a : cfg.algorithms)
        if (a != "maxnttop" && a != "lmst" && a != "bruteforce")
          throw ConfigError(v.line, key, "unknown algorithm '" + a + "'");
    } else if (key == "beta_sweep") {
      if (v.text == "none" || v.text.empty()) {
        cfg.sweep.reset();
        continue;
      }
      std::string t = v.text;
      std::replace(t.begin(), t.end(), ':', ',');
      const auto parts = detail::split_list(t);
      if (parts.size() != 3) throw ConfigError(v.line, key, "expected start:stop:step");
      BetaSweep s{detail::to_number(key, {parts[0], v.line}), detail::to_number(key, {parts[1], v.line}),
                  detail::to_number(key, {parts[2], v.line})};
      if (!(s.step > 0.0)) throw ConfigError(v.line, key, "step must be positive");
      if (s.stop < s.start) throw ConfigError(v.line, key, "stop must be >= start");
      cfg.sweep = s;
    } else if (key == "eps") cfg.eps = num();
    else if (key == "max_iters") cfg.max_iters = static_cast<int>(integer());
    else if (key == "bf_step_db") cfg.bf_step_db = num();
    else if (key == "merge_frames") {
      if (v.text == "patches") cfg.patch_frames = true;
      else if (v.text == "singletons") cfg.patch_frames = false;
      else throw ConfigError(v.line, key, "expected 'patches' or 'singletons'");
    } else if (key == "out") cfg.out_dir = v.text;
    else if (key == "dump_topologies") cfg.dump_topologies = detail::to_bool(key, v);
    else if (key == "record_timing") cfg.record_timing = detail::to_bool(key, v);
    else if (key == "nu") cfg.radio.nu = num();
    else if (key == "noise_dbm") cfg.radio.noise_dbm = num();
    else if (key == "beta_db") cfg.radio.beta_db = num();
    else if (key == "p_tmax_dbm") cfg.radio.p_tmax_dbm = num();
    else if (key == "p_rmin_dbm") cfg.radio.p_rmin_dbm = num();
    else if (key == "bandwidth_hz") cfg.radio.bandwidth_hz = num();
    else if (key == "rate_snr_cap_db") cfg.radio.rate_snr_cap_db = num();
    else if (key == "shadowing_sigma_db") {
      cfg.radio.gain_model.sigma_db = num();
      cfg.radio.gain_model.kind = cfg.radio.gain_model.sigma_db > 0.0 ? GainModel::Kind::LogNormal : GainModel::Kind::Unit;
    } else if (key == "shadowing_seed") cfg.radio.gain_model.seed = static_cast<std::uint64_t>(integer());
    else throw ConfigError(v.line, key, "unknown key");
  }
  cfg.validate();
  return cfg;
}

/// Parses a key = value file, or a JSON object with the same keys. The text
/// "defaults" yields the built-in configuration.
inline ExperimentConfig parse_config(const std::string& text) {
  const auto t = detail::trim(text);
  if (t == "defaults") return config_from_values({});
  if (!t.empty() && t.front() == '{') return config_from_values(detail::parse_json_values(t));
  return config_from_values(detail::parse_key_values(text));
}

/// Loads a config path; the bare word "defaults" needs no file.
inline ExperimentConfig load_config(const std::string& path) {
  if (path == "defaults") return parse_config("defaults");
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "", "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// ---------------------------------------------------------------------------
// Pipeline pieces shared by the CLI and the experiment runner.

inline Deployment generate(const ExperimentConfig& cfg, std::uint64_t seed) {
  return cfg.shape == Shape::Annulus ? generate_annulus(cfg.n, cfg.inner_km, cfg.outer_km, seed)
                                     : generate_rectangle(cfg.n, cfg.width_km, cfg.height_km, seed);
}

/// Localization plus the distance table the topology algorithms see. When the
/// graph cannot be decomposed (tiny or sparse networks) the measured distances
/// are used directly.
struct LocalizedScenario {
  std::optional<LocalizationResult> localization;
  DistanceTable table;
  std::vector<std::vector<int>> frames;
};

inline LocalizedScenario localize_scenario(const MeasurementGraph& mg, const std::vector<Point>* truth = nullptr) {
  LocalizedScenario out;
  try {
    auto res = localize(mg);
    if (truth) evaluate_localization(res, *truth);
    out.table = DistanceTable::from_estimate(res.coords, res.component, mg);
    out.frames = frames_from_patches(res.patches, mg.node_count);
    out.localization = std::move(res);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::UnlocalizableGraph) throw;
    std::vector<std::optional<Point>> none(static_cast<std::size_t>(mg.node_count));
    out.table = DistanceTable::from_estimate(none, std::vector<int>(none.size(), -1), mg);
  }
  return out;
}

/// Runs one topology algorithm. A MaxNTtop run that hits max_iters still
/// returns its topology with converged = false.
inline Topology extract(const std::string& algo, const LocalizedScenario& sc, const MeasurementGraph& mg,
                        const RadioParams& radio, double eps, int max_iters, double bf_step_db,
                        bool patch_frames = true) {
  if (algo == "maxnttop") {
    MaxNtOptions opts;
    opts.eps = eps;
    opts.max_iters = max_iters;
    if (patch_frames) opts.frames = sc.frames;
    try {
      return max_nt_top(sc.table, radio, opts);
    } catch (const NotConvergedError& e) {
      return e.topology();
    }
  }
  if (algo == "lmst") return lmst(sc.table, radio);
  if (algo == "bruteforce") {
    const auto adj = mg.adjacency();
    return brute_force(sc.table, radio, bf_step_db, &adj);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown algorithm '" + algo + "'");
}

// ---------------------------------------------------------------------------
// SVG charts.

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

namespace detail {

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  return colors[i % 6];
}

inline std::string svg_num(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << v;
  return os.str();
}

inline std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

inline std::string tick_label(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

}  // namespace detail

/// Minimal line chart: axes, five ticks per axis, one polyline per series.
inline std::string svg_line_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                                  const std::vector<Series>& series) {
  const double W = 640, H = 420, L = 80, R = 150, T = 40, B = 60;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y1 = 0.0;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      if (std::isfinite(s.y[i])) y1 = std::max(y1, s.y[i]);
    }
  if (!std::isfinite(x0)) x0 = 0.0, x1 = 1.0;
  if (x1 <= x0) x1 = x0 + 1.0;
  if (y1 <= 0.0) y1 = 1.0;
  y1 *= 1.05;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - y / y1 * (H - T - B); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << detail::svg_escape(title)
     << "</text>\n"
     << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0, yv = y1 * k / 4.0;
    os << "<text x=\"" << detail::svg_num(px(xv)) << "\" y=\"" << H - B + 18
       << "\" text-anchor=\"middle\" font-size=\"11\">" << detail::tick_label(xv) << "</text>\n"
       << "<text x=\"" << L - 6 << "\" y=\"" << detail::svg_num(py(yv) + 4)
       << "\" text-anchor=\"end\" font-size=\"11\">" << detail::tick_label(yv) << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 16 << "\" text-anchor=\"middle\" font-size=\"13\">"
     << detail::svg_escape(xlabel) << "</text>\n"
     << "<text x=\"18\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
     << (T + H - B) / 2 << ")\">" << detail::svg_escape(ylabel) << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    os << "<polyline fill=\"none\" stroke=\"" << detail::palette(s) << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < series[s].x.size(); ++i)
      if (std::isfinite(series[s].y[i]))
        os << detail::svg_num(px(series[s].x[i])) << ',' << detail::svg_num(py(series[s].y[i])) << ' ';
    os << "\"/>\n";
    os << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 20 + 18 * s << "\" fill=\"" << detail::palette(s)
       << "\" font-size=\"12\">" << detail::svg_escape(series[s].label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

/// Bar chart with optional error bars (one standard deviation).
inline std::string svg_bar_chart(const std::string& title, const std::string& ylabel,
                                 const std::vector<std::string>& labels, const std::vector<double>& values,
                                 const std::vector<double>& errors = {}) {
  const double W = 480, H = 380, L = 70, R = 20, T = 40, B = 60;
  double y1 = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i)
    y1 = std::max(y1, values[i] + (i < errors.size() ? errors[i] : 0.0));
  if (y1 <= 0.0) y1 = 1.0;
  y1 *= 1.1;
  const double slot = (W - L - R) / std::max<std::size_t>(values.size(), 1);
  auto py = [&](double y) { return H - B - y / y1 * (H - T - B); };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << detail::svg_escape(title)
     << "</text>\n"
     << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n"
     << "<text x=\"18\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
     << (T + H - B) / 2 << ")\">" << detail::svg_escape(ylabel) << "</text>\n";
  for (int k = 0; k <= 4; ++k)
    os << "<text x=\"" << L - 6 << "\" y=\"" << detail::svg_num(py(y1 * k / 4.0) + 4)
       << "\" text-anchor=\"end\" font-size=\"11\">" << detail::tick_label(y1 * k / 4.0) << "</text>\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = L + slot * i + slot * 0.2, w = slot * 0.6;
    os << "<rect x=\"" << detail::svg_num(x) << "\" y=\"" << detail::svg_num(py(values[i])) << "\" width=\""
       << detail::svg_num(w) << "\" height=\"" << detail::svg_num(H - B - py(values[i])) << "\" fill=\""
       << detail::palette(i) << "\"/>\n";
    if (i < errors.size() && errors[i] > 0.0) {
      const double cx = x + w / 2;
      os << "<line x1=\"" << detail::svg_num(cx) << "\" y1=\"" << detail::svg_num(py(values[i] - errors[i]))
         << "\" x2=\"" << detail::svg_num(cx) << "\" y2=\"" << detail::svg_num(py(values[i] + errors[i]))
         << "\" stroke=\"black\"/>\n";
    }
    os << "<text x=\"" << detail::svg_num(x + w / 2) << "\" y=\"" << H - B + 18
       << "\" text-anchor=\"middle\" font-size=\"12\">" << detail::svg_escape(labels[i]) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

/// Writes the charts for a report set into dir: degree.svg always; the two
/// throughput-versus-beta charts when more than one beta is present.
inline std::vector<std::string> write_plots(const std::vector<RunReport>& reports, const std::string& dir) {
  std::vector<std::string> written;
  bool any_ok = false;
  for (const auto& r : reports) any_ok = any_ok || r.ok();
  if (!any_ok) return written;
  const auto rows = aggregate(reports);
  std::filesystem::create_directories(dir);

  // Algorithm order of first appearance keeps charts stable.
  std::vector<std::string> algos;
  std::set<double> betas;
  for (const auto& r : reports) {
    if (std::find(algos.begin(), algos.end(), r.algo) == algos.end()) algos.push_back(r.algo);
    if (r.ok()) betas.insert(r.beta_db);
  }
  const std::string scenario = rows.front().scenario_id;

  std::vector<std::string> labels;
  std::vector<double> means, errs;
  const double beta0 = *betas.begin();
  for (const auto& a : algos)
    for (const auto& row : rows)
      if (row.algo == a && row.beta_db == beta0) {
        labels.push_back(a);
        means.push_back(row.avg_node_degree.mean);
        errs.push_back(row.avg_node_degree.stddev);
      }
  const auto degree_path = (std::filesystem::path(dir) / "degree.svg").string();
  io::write_text_file(degree_path, svg_bar_chart("Average node degree (" + scenario + ")", "avg node degree", labels, means, errs));
  written.push_back(degree_path);

  if (betas.size() > 1) {
    for (const bool per_link : {false, true}) {
      std::vector<Series> series;
      for (const auto& a : algos) {
        Series s{a, {}, {}};
        for (const auto& row : rows)
          if (row.algo == a) {
            s.x.push_back(row.beta_db);
            s.y.push_back((per_link ? row.throughput_per_link.mean : row.throughput_total.mean) / 1e6);
          }
        series.push_back(std::move(s));
      }
      const auto path = (std::filesystem::path(dir) /
                         (per_link ? "throughput_per_link_vs_beta.svg" : "throughput_total_vs_beta.svg"))
                            .string();
      io::write_text_file(path, svg_line_chart(std::string(per_link ? "Per-link" : "Network") + " throughput (" +
                                                   scenario + ")",
                                               "SNR threshold beta (dB)", "throughput (Mb/s)", series));
      written.push_back(path);
    }
  }
  return written;
}

// ---------------------------------------------------------------------------
// Experiment runner.

struct ExperimentResult {
  std::vector<RunReport> reports;  // ordered by (seed, algorithm, sweep index)
  std::vector<std::string> files;
};

inline int worker_count(std::size_t jobs) {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  std::size_t cap = hw;
  if (const char* env = std::getenv("MAXNT_WORKERS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) cap = static_cast<std::size_t>(v);
  }
  return static_cast<int>(std::max<std::size_t>(1, std::min(cap, jobs)));
}

namespace detail {

struct SeedOutput {
  std::vector<RunReport> reports;
  std::vector<std::pair<std::string, std::string>> files;  // relative path, contents
};

inline SeedOutput run_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  SeedOutput out;
  const auto betas = cfg.betas();
  auto fail_all = [&](const std::string& status) {
    out.reports.clear();
    for (const auto& algo : cfg.algorithms)
      for (double b : betas) {
        RunReport r;
        r.scenario_id = cfg.scenario_id();
        r.seed = seed;
        r.algo = algo;
        r.beta_db = b;
        r.localization_rms_km = std::numeric_limits<double>::quiet_NaN();
        r.status = status;
        out.reports.push_back(r);
      }
  };
  try {
    const auto dep = generate(cfg, seed);
    const auto mg = measure(dep, cfg.sensing_range(), cfg.noise_factor, seed);
    const auto sc = localize_scenario(mg, &dep.positions);
    const auto truth = DistanceTable::from_points(dep.positions);
    const double rms = sc.localization ? sc.localization->rms_km : std::numeric_limits<double>::quiet_NaN();
    const std::string tag = cfg.scenario_id() + "_s" + std::to_string(seed);
    out.files.emplace_back("scenarios/" + tag + ".json", io::scenario_to_json(dep, &mg).dump(1) + "\n");

    for (const auto& algo : cfg.algorithms) {
      for (std::size_t bi = 0; bi < betas.size(); ++bi) {
        RunReport r;
        r.scenario_id = cfg.scenario_id();
        r.seed = seed;
        r.algo = algo;
        r.beta_db = betas[bi];
        r.localization_rms_km = rms;
        RadioParams radio = cfg.radio;
        radio.beta_db = betas[bi];
        try {
          const auto t0 = std::chrono::steady_clock::now();
          auto topo = extract(algo, sc, mg, radio, cfg.eps, cfg.max_iters, cfg.bf_step_db, cfg.patch_frames);
          const auto t1 = std::chrono::steady_clock::now();
          const auto scored = rescore(topo, truth, radio);
          const auto tp = network_throughput(scored, radio);
          r.avg_node_degree = avg_node_degree(scored);
          r.throughput_total = tp.total_bps;
          r.throughput_per_link = tp.per_link_bps;
          r.iterations = topo.iterations;
          if (cfg.record_timing) r.wall_time_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
          if (!topo.converged) r.status = "not_converged";
          if (cfg.dump_topologies)
            out.files.emplace_back("topologies/" + tag + "_" + algo + "_b" + io::format_double(betas[bi]) + ".json",
                                   io::topology_to_json(scored).dump(1) + "\n");
        } catch (const Error& e) {
          r.status = std::string("failed:") + std::string(to_string(e.code()));
        }
        out.reports.push_back(std::move(r));
      }
    }
  } catch (const Error& e) {
    fail_all(std::string("failed:") + std::string(to_string(e.code())));
  } catch (const std::exception&) {
    fail_all("failed:internal");
  }
  return out;
}

}  // namespace detail

/// Runs every seed (in parallel), then writes reports.csv, summary.csv,
/// per-seed scenario and topology dumps and the SVG charts under out_dir.
/// Output is a pure function of the config unless record_timing is set.
inline ExperimentResult run(const ExperimentConfig& cfg, bool write_files = true) {
  cfg.validate();
  const std::size_t jobs = cfg.seeds.size();
  std::vector<detail::SeedOutput> results(jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < jobs; k = next++) results[k] = detail::run_seed(cfg, cfg.seeds[k]);
  };
  const int nworkers = worker_count(jobs);
  if (nworkers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < nworkers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  ExperimentResult res;
  for (auto& r : results)
    for (auto& rep : r.reports) res.reports.push_back(std::move(rep));
  if (!write_files) return res;

  namespace fs = std::filesystem;
  try {
    fs::create_directories(cfg.out_dir);
    for (const auto& r : results)
      for (const auto& [rel, text] : r.files) {
        const auto path = fs::path(cfg.out_dir) / rel;
        fs::create_directories(path.parent_path());
        io::write_text_file(path.string(), text);
        res.files.push_back(path.string());
      }
    std::ostringstream csv;
    io::write_reports_csv(csv, res.reports);
    const auto csv_path = (fs::path(cfg.out_dir) / "reports.csv").string();
    io::write_text_file(csv_path, csv.str());
    res.files.push_back(csv_path);
    bool any_ok = false;
    for (const auto& r : res.reports) any_ok = any_ok || r.ok();
    if (any_ok) {
      std::ostringstream summary;
      io::write_summary_csv(summary, aggregate(res.reports));
      const auto summary_path = (fs::path(cfg.out_dir) / "summary.csv").string();
      io::write_text_file(summary_path, summary.str());
      res.files.push_back(summary_path);
    }
    for (auto& f : write_plots(res.reports, cfg.out_dir)) res.files.push_back(std::move(f));
  } catch (const fs::filesystem_error& e) {
    throw Error(ErrorCode::IoError, e.what());
  }
  return res;
}

}  // namespace maxnt

#endif  // MAXNT_HARNESS_HPP
