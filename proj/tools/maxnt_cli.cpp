// maxnt: command-line front end. Exit codes: 0 ok, 1 config or usage error,
// 2 runtime failure.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "maxnt/maxnt.hpp"

namespace {

using maxnt::ConfigError;
using maxnt::Error;
using maxnt::ErrorCode;

void emit(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    maxnt::io::write_text_file(out, text);
  }
}

maxnt::ExperimentConfig config_or_defaults(const std::string& path) {
  return maxnt::load_config(path.empty() ? "defaults" : path);
}

struct ScenarioFile {
  maxnt::Deployment dep;
  maxnt::MeasurementGraph mg;
};

ScenarioFile read_scenario(const std::string& path) {
  const auto j = maxnt::io::read_json_file(path);
  try {
    return {maxnt::io::deployment_from_json(j), maxnt::io::measurements_from_json(j)};
  } catch (const maxnt::io::Json::exception& e) {
    throw Error(ErrorCode::IoError, "'" + path + "': " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anchor-free localization and power-minimal topology extraction for IoT networks"};
  app.require_subcommand(1);

  std::string config_path, out, algo = "maxnttop", input;
  std::optional<std::uint64_t> seed;
  std::optional<double> beta_db;

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a deployment and its measurement graph as JSON");
  std::string shape;
  std::optional<int> n;
  std::optional<double> inner_km, outer_km, width_km, height_km, range_km, noise;
  gen->add_option("--config", config_path, "Experiment config supplying scenario defaults");
  gen->add_option("--shape", shape, "annulus or rectangle");
  gen->add_option("--n", n, "Node count");
  gen->add_option("--inner-km", inner_km, "Annulus inner radius (km)");
  gen->add_option("--outer-km", outer_km, "Annulus outer radius (km)");
  gen->add_option("--width-km", width_km, "Rectangle width (km)");
  gen->add_option("--height-km", height_km, "Rectangle height (km)");
  gen->add_option("--sensing-range-km", range_km, "Measurement range (km); derived from radio params if absent");
  gen->add_option("--noise", noise, "Multiplicative distance noise factor");
  gen->add_option("--seed", seed, "Scenario seed");
  gen->add_option("--out", out, "Output file (default stdout)");

  // localize
  auto* loc = app.add_subcommand("localize", "Localize a scenario JSON; writes coordinates and RMS error");
  loc->add_option("scenario", input, "Scenario JSON")->required();
  loc->add_option("--out", out, "Output file (default stdout)");

  // extract
  auto* ext = app.add_subcommand("extract", "Extract a topology from a scenario JSON");
  ext->add_option("scenario", input, "Scenario JSON")->required();
  ext->add_option("--algo", algo, "maxnttop, lmst or bruteforce")
      ->check(CLI::IsMember({"maxnttop", "lmst", "bruteforce"}));
  ext->add_option("--config", config_path, "Config supplying radio parameters ('defaults' for built-ins)");
  ext->add_option("--beta-db", beta_db, "SNR threshold override (dB)");
  ext->add_option("--out", out, "Output file (default stdout)");

  // experiment
  auto* exp = app.add_subcommand("experiment", "Run a full experiment sweep from a config file");
  exp->add_option("--config", config_path, "Experiment config")->required();
  exp->add_option("--out", out, "Output directory override");
  exp->add_option("--seed", seed, "Run a single seed");
  std::string exp_algo;
  exp->add_option("--algo", exp_algo, "Run a single algorithm")
      ->check(CLI::IsMember({"maxnttop", "lmst", "bruteforce"}));
  exp->add_option("--beta-db", beta_db, "Fixed SNR threshold (disables the sweep)");

  // plot
  auto* plot = app.add_subcommand("plot", "Render SVG charts from a reports.csv");
  plot->add_option("reports", input, "reports.csv")->required();
  plot->add_option("--out", out, "Output directory (default: alongside the CSV)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*gen) {
      auto cfg = config_or_defaults(config_path);
      if (!shape.empty()) {
        if (shape == "annulus") cfg.shape = maxnt::Shape::Annulus;
        else if (shape == "rectangle") cfg.shape = maxnt::Shape::Rectangle;
        else throw ConfigError(0, "shape", "expected annulus or rectangle");
      }
      if (n) cfg.n = *n;
      if (inner_km) cfg.inner_km = *inner_km;
      if (outer_km) cfg.outer_km = *outer_km;
      if (width_km) cfg.width_km = *width_km;
      if (height_km) cfg.height_km = *height_km;
      if (range_km) cfg.sensing_range_km = *range_km;
      if (noise) cfg.noise_factor = *noise;
      const std::uint64_t s = seed.value_or(cfg.seeds.front());
      maxnt::Deployment dep;
      maxnt::MeasurementGraph mg;
      try {
        dep = maxnt::generate(cfg, s);
        mg = maxnt::measure(dep, cfg.sensing_range(), cfg.noise_factor, s);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidRegion || e.code() == ErrorCode::InvalidCount ||
            e.code() == ErrorCode::InvalidArgument)
          throw ConfigError(0, "", e.what());
        throw;
      }
      emit(maxnt::io::scenario_to_json(dep, &mg).dump(1) + "\n", out);
    } else if (*loc) {
      const auto sc = read_scenario(input);
      auto res = maxnt::localize(sc.mg);
      if (sc.dep.node_count == sc.mg.node_count) maxnt::evaluate_localization(res, sc.dep.positions);
      emit(maxnt::io::localization_to_json(res).dump(1) + "\n", out);
      std::cerr << "localized " << res.localized_count() << "/" << res.node_count << " nodes, rms_km "
                << maxnt::io::format_double(res.rms_km) << "\n";
    } else if (*ext) {
      const auto cfg = config_or_defaults(config_path);
      auto radio = cfg.radio;
      if (beta_db) radio.beta_db = *beta_db;
      const auto sc = read_scenario(input);
      const auto ls = maxnt::localize_scenario(sc.mg);
      const auto topo = maxnt::extract(algo, ls, sc.mg, radio, cfg.eps, cfg.max_iters, cfg.bf_step_db,
                                           cfg.patch_frames);
      auto j = maxnt::io::topology_to_json(topo);
      j["algo"] = algo;
      j["avg_node_degree"] = topo.n > 0 ? maxnt::avg_node_degree(topo) : 0.0;
      const auto tp = maxnt::network_throughput(topo, radio);
      j["throughput_total_bps"] = tp.total_bps;
      j["throughput_per_link_bps"] = tp.per_link_bps;
      emit(j.dump(1) + "\n", out);
      if (!topo.converged) {
        std::cerr << "MaxNTtop did not converge within " << cfg.max_iters << " iterations\n";
        return 2;
      }
    } else if (*exp) {
      auto cfg = maxnt::load_config(config_path);
      if (!out.empty()) cfg.out_dir = out;
      if (seed) cfg.seeds = {*seed};
      if (!exp_algo.empty()) cfg.algorithms = {exp_algo};
      if (beta_db) {
        cfg.sweep.reset();
        cfg.radio.beta_db = *beta_db;
      }
      const auto res = maxnt::run(cfg);
      int failed = 0;
      for (const auto& r : res.reports) failed += r.ok() ? 0 : 1;
      std::cerr << res.reports.size() << " runs (" << failed << " not ok), output in " << cfg.out_dir << "\n";
      if (failed > 0) return 2;
    } else if (*plot) {
      std::ifstream in(input);
      if (!in) throw Error(ErrorCode::IoError, "cannot open '" + input + "'");
      const auto reports = maxnt::io::parse_reports_csv(in);
      const std::string dir =
          out.empty() ? std::filesystem::path(input).parent_path().string() : out;
      for (const auto& f : maxnt::write_plots(reports, dir.empty() ? "." : dir)) std::cerr << "wrote " << f << "\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error [" << maxnt::to_string(e.code()) << "]: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
