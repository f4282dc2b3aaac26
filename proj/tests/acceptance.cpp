// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "maxnt/maxnt.hpp"

using namespace maxnt;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass{false};
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

const std::string kConfigs = std::string(MAXNT_SOURCE_DIR) + "/configs/";

// 1. Noiseless annuli stitched from several patches are recovered exactly.
Outcome exact_localization() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  int min_patches = 1 << 30, min_localized = 1 << 30;
  bool all_overlaps = true;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto dep = generate_annulus(50, 0.2, 1.0, seed);
    auto res = localize(measure(dep, 0.6, 0.0, seed));
    evaluate_localization(res, dep.positions);
    worst = std::max(worst, std::isfinite(res.rms_km) ? res.rms_km : 1e9);
    min_patches = std::min(min_patches, static_cast<int>(res.patches.patches.size()));
    min_localized = std::min(min_localized, res.localized_count());
    for (const auto& [k, l] : res.patches.adjacency)
      all_overlaps = all_overlaps && shared_members(res.patches.patches[k], res.patches.patches[l]).size() >= 3;
  }
  const double secs = seconds_since(t0);
  const bool pass = worst <= 1e-6 && min_patches >= 2 && all_overlaps && secs <= 10.0;
  return {pass, "20 seeds, worst rms " + fmt("%.3g", worst) + " km, min patches " + std::to_string(min_patches) +
                    ", min localized " + std::to_string(min_localized) + "/50, " + fmt("%.2f", secs) + " s"};
}

// 2. Classical scaling reproduces exact distances.
Outcome mds_exactness() {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 3 + static_cast<int>(rng() % 28);
    std::vector<Point> pts(n);
    for (auto& p : pts) p = {u(rng), u(rng)};
    Eigen::MatrixXd d(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) d(i, j) = distance(pts[i], pts[j]);
    const auto mds = classical_mds(d);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        worst = std::max(worst, std::abs(distance(mds.coords[i], mds.coords[j]) - d(i, j)) / d(i, j));
  }
  return {worst <= 1e-9, "100 point sets, worst relative error " + fmt("%.3g", worst)};
}

std::vector<std::pair<int, int>> random_connected(int n, std::mt19937_64& rng) {
  std::vector<std::pair<int, int>> edges;
  std::set<std::pair<int, int>> seen;
  for (int v = 1; v < n; ++v) {
    const int u = static_cast<int>(rng() % v);
    edges.push_back({u, v});
    seen.insert({u, v});
  }
  std::bernoulli_distribution extra(0.2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (!seen.count({i, j}) && extra(rng)) edges.push_back({i, j});
  return edges;
}

// 3. Eigenvector synchronization recovers consistent signs and angles.
Outcome sync_exactness() {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, kTwoPi);
  int sign_failures = 0;
  double worst_angle = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 3 + static_cast<int>(rng() % 30);
    std::vector<int> sigma(n);
    std::vector<double> phi(n);
    for (int k = 0; k < n; ++k) {
      sigma[k] = rng() % 2 ? 1 : -1;
      phi[k] = u(rng);
    }
    const auto edges = random_connected(n, rng);
    std::vector<PairAlignment> signs, angles;
    for (const auto& [k, l] : edges) {
      PairAlignment a;
      a.k = k;
      a.l = l;
      a.z = sigma[k] * sigma[l];
      signs.push_back(a);
      a.z = 1;
      a.theta = wrap_angle(phi[k] - phi[l]);
      angles.push_back(a);
    }
    auto s1 = build_sync_state(n, signs);
    const auto z = sync_reflections(s1);
    const int flip = z[0] * sigma[0];
    for (int k = 0; k < n; ++k) sign_failures += z[k] == flip * sigma[k] ? 0 : 1;

    auto s2 = build_sync_state(n, angles);
    sync_reflections(s2);
    apply_reflections(s2);
    const auto th = sync_rotations(s2);
    const double offset = th[0] - phi[0];
    for (int k = 0; k < n; ++k) worst_angle = std::max(worst_angle, std::abs(angle_diff(th[k] - phi[k], offset)));
  }
  return {sign_failures == 0 && worst_angle <= 1e-9,
          "50 graphs, sign mismatches " + std::to_string(sign_failures) + ", worst angle error " +
              fmt("%.3g", worst_angle) + " rad"};
}

// 4. Closed-form power assignment is optimal.
Outcome lp_optimality() {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ud(0.05, 60.0);
  std::bernoulli_distribution keep(0.3);
  const RadioParams params;
  double worst_rel = 0.0, worst_bf = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 19);
    std::vector<RequiredLink> links;
    DistanceTable table(n);
    std::vector<std::vector<int>> graph(n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (keep(rng)) {
          const double d = ud(rng);
          links.push_back({i, j, d, 1.0});
          table.set(i, j, d);
          graph[i].push_back(j);
          graph[j].push_back(i);
        }
    const auto lp = assign_power_lp(links, n, params);
    const auto sx = assign_power_simplex(links, n, params);
    const auto bf = brute_force(table, params, 0.01, &graph);
    for (int i = 0; i < n; ++i) {
      if (lp.p_t_dbm[i] == kPowerOff) {
        if (sx.p_t_dbm[i] != kPowerOff || bf.powers.p_t_dbm[i] != kPowerOff) worst_rel = 1.0;
        continue;
      }
      const double a = dbm_to_mw(lp.p_t_dbm[i]);
      worst_rel = std::max(worst_rel, std::abs(a - dbm_to_mw(sx.p_t_dbm[i])) / a);
      worst_bf = std::max(worst_bf, std::abs(bf.powers.p_t_dbm[i] - lp.p_t_dbm[i]));
    }
  }
  return {worst_rel <= 1e-9 && worst_bf <= 0.01,
          "100 instances, simplex worst relative gap " + fmt("%.3g", worst_rel) + ", 0.01 dB grid worst gap " +
              fmt("%.4f", worst_bf) + " dB"};
}

// Per-run pipeline with the matching details the CSV does not carry.
struct SuiteStats {
  std::map<std::string, double> degree, throughput, matched, matched_snr;
  std::vector<int> iterations;
  bool all_converged{true};
  int runs{0};
  double seconds{0.0};
};

SuiteStats run_suite(const ExperimentConfig& cfg) {
  const auto t0 = Clock::now();
  SuiteStats s;
  for (auto seed : cfg.seeds) {
    const auto dep = generate(cfg, seed);
    const auto mg = measure(dep, cfg.sensing_range(), cfg.noise_factor, seed);
    const auto sc = localize_scenario(mg, &dep.positions);
    const auto truth = DistanceTable::from_points(dep.positions);
    for (const auto& algo : cfg.algorithms) {
      const auto topo = extract(algo, sc, mg, cfg.radio, cfg.eps, cfg.max_iters, cfg.bf_step_db);
      const auto scored = rescore(topo, truth, cfg.radio);
      const auto tp = network_throughput(scored, cfg.radio);
      s.degree[algo] += avg_node_degree(scored);
      s.throughput[algo] += tp.total_bps;
      s.matched[algo] += tp.matched;
      s.matched_snr[algo] += tp.mean_matched_snr_db;
      if (algo == "maxnttop") {
        s.iterations.push_back(topo.iterations);
        s.all_converged = s.all_converged && topo.converged;
      }
    }
    ++s.runs;
  }
  for (auto* m : {&s.degree, &s.throughput, &s.matched, &s.matched_snr})
    for (auto& [k, v] : *m) v /= s.runs;
  s.seconds = seconds_since(t0);
  return s;
}

// 5. MaxNTtop converges quickly on the annulus.
Outcome convergence(const SuiteStats& annulus) {
  double mean = 0.0;
  for (int it : annulus.iterations) mean += it;
  mean /= static_cast<double>(annulus.iterations.size());
  std::string list;
  for (int it : annulus.iterations) list += (list.empty() ? "" : ",") + std::to_string(it);
  return {mean <= 10.0 && annulus.all_converged,
          "mean iterations " + fmt("%.2f", mean) + " (" + list + "), all converged: " +
              (annulus.all_converged ? "yes" : "no")};
}

// 6. Degree ordering MaxNTtop >= brute force >= LMST.
Outcome degree_ordering(const SuiteStats& a, const SuiteStats& r) {
  bool pass = true;
  std::string detail;
  for (const auto* s : {&a, &r}) {
    const double m = s->degree.at("maxnttop"), b = s->degree.at("bruteforce"), l = s->degree.at("lmst");
    pass = pass && m >= b && b >= l && m > l && s->seconds <= 60.0;
    detail += std::string(detail.empty() ? "annulus " : "; rectangle ") + fmt("%.2f", m) + " / " + fmt("%.2f", b) +
              " / " + fmt("%.2f", l) + " (" + fmt("%.1f", s->seconds) + " s)";
  }
  return {pass, "degree MaxNTtop / brute force / LMST: " + detail};
}

// 7. MaxNTtop carries more traffic than brute force.
Outcome throughput_ordering(const SuiteStats& a, const SuiteStats& r) {
  bool pass = true;
  std::string detail;
  for (const auto* s : {&a, &r}) {
    const double ratio = s->throughput.at("maxnttop") / s->throughput.at("bruteforce");
    const bool links = s->matched.at("maxnttop") >= s->matched.at("bruteforce");
    const bool snr = s->matched_snr.at("maxnttop") >= s->matched_snr.at("bruteforce");
    pass = pass && ratio > 1.0 && links && snr;
    detail += std::string(detail.empty() ? "annulus" : "; rectangle") + " ratio " + fmt("%.3f", ratio) +
              ", matched links " + fmt("%.1f", s->matched.at("maxnttop")) + " vs " +
              fmt("%.1f", s->matched.at("bruteforce")) + ", matched SNR " + fmt("%.1f", s->matched_snr.at("maxnttop")) +
              " vs " + fmt("%.1f", s->matched_snr.at("bruteforce")) + " dB";
  }
  return {pass, detail};
}

// 8. Per-link throughput saturates past 25 dB.
Outcome saturation() {
  auto cfg = load_config(kConfigs + "fig4.toml");
  cfg.algorithms = {"maxnttop"};
  const auto res = run(cfg, false);
  std::map<double, std::pair<double, int>> curve;
  bool ok = true;
  for (const auto& r : res.reports) {
    ok = ok && r.ok();
    curve[r.beta_db].first += r.throughput_per_link;
    curve[r.beta_db].second += 1;
  }
  bool monotone = true;
  double prev = -1.0, at25 = 0.0, at30 = 0.0;
  std::string points;
  for (const auto& [b, acc] : curve) {
    const double v = acc.first / acc.second;
    if (b <= 25.0 + 1e-9) {
      monotone = monotone && v >= prev;
      prev = v;
    }
    if (std::abs(b - 25.0) < 1e-9) at25 = v;
    if (std::abs(b - 30.0) < 1e-9) at30 = v;
    points += (points.empty() ? "" : " ") + fmt("%g", b) + ":" + fmt("%.0f", v / 1e3);
  }
  const double change = at25 > 0.0 ? std::abs(at30 - at25) / at25 : 1.0;
  return {ok && monotone && change < 0.05 && curve.size() == 13,
          "kb/s per link by beta " + points + "; change 25->30 dB " + fmt("%.2f", 100.0 * change) + "%"};
}

bool laman_rigid(const Graph& g) {
  const int n = g.n;
  if (n <= 1) return true;
  const int need = 2 * n - 3;
  const int m = static_cast<int>(g.edges.size());
  if (m < need) return false;
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    if (__builtin_popcount(mask) != need) continue;
    bool sparse = true;
    for (unsigned vs = 1; vs < (1u << n) && sparse; ++vs) {
      const int k = __builtin_popcount(vs);
      if (k < 2) continue;
      int spanned = 0;
      for (int e = 0; e < m; ++e)
        if ((mask >> e & 1u) && (vs >> g.edges[e].first & 1u) && (vs >> g.edges[e].second & 1u)) ++spanned;
      if (spanned > 2 * k - 3) sparse = false;
    }
    if (sparse) return true;
  }
  return false;
}

// 9. Pebble game agrees with exhaustive Laman counting.
Outcome laman_agreement() {
  std::mt19937_64 rng(9);
  int disagreements = 0, rigid = 0;
  const int total = 250;
  for (int trial = 0; trial < total; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 5);
    Graph g{n, {}};
    std::bernoulli_distribution keep(0.3 + 0.6 * static_cast<double>(rng() % 100) / 100.0);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (keep(rng)) g.edges.push_back({i, j});
    const bool pebble = is_rigid(g);
    rigid += pebble ? 1 : 0;
    disagreements += pebble != laman_rigid(g) ? 1 : 0;
  }
  return {disagreements == 0, std::to_string(total) + " graphs (" + std::to_string(rigid) + " rigid), " +
                                  std::to_string(disagreements) + " disagreements"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 10. Two full runs of the annulus degree config write identical CSVs.
Outcome determinism() {
  const auto base = fs::temp_directory_path() / "maxnt_acceptance";
  fs::remove_all(base);
  auto cfg = load_config(kConfigs + "fig2.toml");
  cfg.out_dir = (base / "a").string();
  run(cfg);
  cfg.out_dir = (base / "b").string();
  run(cfg);
  const auto a = slurp(base / "a" / "reports.csv");
  const auto b = slurp(base / "b" / "reports.csv");
  const auto rows = std::count(a.begin(), a.end(), '\n') - 1;
  return {!a.empty() && a == b, std::to_string(rows) + " rows, " + std::to_string(a.size()) + " bytes, " +
                                    (a == b ? "identical" : "different")};
}

Outcome guarded(const std::function<Outcome()>& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    return {false, std::string("exception: ") + e.what()};
  }
}

}  // namespace

int main() {
  std::vector<std::pair<std::string, Outcome>> results;
  results.emplace_back("exact localization recovery", guarded(exact_localization));
  results.emplace_back("MDS exactness", guarded(mds_exactness));
  results.emplace_back("synchronization exactness", guarded(sync_exactness));
  results.emplace_back("LP optimality", guarded(lp_optimality));

  SuiteStats annulus, rectangle;
  std::string suite_error;
  try {
    annulus = run_suite(load_config(kConfigs + "fig2.toml"));
    rectangle = run_suite(load_config(kConfigs + "fig3.toml"));
  } catch (const std::exception& e) {
    suite_error = e.what();
  }
  auto with_suites = [&](const std::function<Outcome()>& f) {
    if (!suite_error.empty()) return Outcome{false, "suite failed: " + suite_error};
    return guarded(f);
  };
  results.emplace_back("convergence count", with_suites([&] { return convergence(annulus); }));
  results.emplace_back("degree ordering", with_suites([&] { return degree_ordering(annulus, rectangle); }));
  results.emplace_back("throughput ordering", with_suites([&] { return throughput_ordering(annulus, rectangle); }));
  results.emplace_back("saturation shape", guarded(saturation));
  results.emplace_back("rigidity oracle agreement", guarded(laman_agreement));
  results.emplace_back("determinism", guarded(determinism));

  int failures = 0;
  for (std::size_t k = 0; k < results.size(); ++k) {
    const auto& [name, o] = results[k];
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", k + 1, name.c_str(), o.detail.c_str());
    failures += o.pass ? 0 : 1;
  }
  std::fflush(stdout);
  return failures == 0 ? 0 : 1;
}
