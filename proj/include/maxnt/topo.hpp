#ifndef MAXNT_TOPO_HPP
#define MAXNT_TOPO_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "maxnt/embed.hpp"
#include "maxnt/error.hpp"
#include "maxnt/geometry.hpp"
#include "maxnt/radio.hpp"
#include "maxnt/rigidity.hpp"
#include "maxnt/scenario.hpp"

namespace maxnt {

/// Symmetric n x n distance table in km; NaN marks an unknown pair.
class DistanceTable {
 public:
  DistanceTable() = default;
  explicit DistanceTable(int n)
      : n_(n), d_(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), std::numeric_limits<double>::quiet_NaN()) {
    for (int i = 0; i < n; ++i) d_[idx(i, i)] = 0.0;
  }

  int size() const { return n_; }
  double at(int i, int j) const { return d_[idx(i, j)]; }
  bool known(int i, int j) const { return !std::isnan(at(i, j)); }
  void set(int i, int j, double d) { d_[idx(i, j)] = d_[idx(j, i)] = d; }

  static DistanceTable from_points(const std::vector<Point>& pts) {
    DistanceTable t(static_cast<int>(pts.size()));
    for (int i = 0; i < t.n_; ++i)
      for (int j = i + 1; j < t.n_; ++j) t.set(i, j, distance(pts[i], pts[j]));
    return t;
  }

  /// Coordinates where both nodes are localized in the same frame, measured
  /// distances otherwise.
  static DistanceTable from_estimate(const std::vector<std::optional<Point>>& coords, const std::vector<int>& frame,
                                     const MeasurementGraph& mg) {
    DistanceTable t(mg.node_count);
    for (const auto& e : mg.edges) t.set(e.i, e.j, e.d);
    for (int i = 0; i < t.n_; ++i) {
      if (!coords[i]) continue;
      for (int j = i + 1; j < t.n_; ++j)
        if (coords[j] && frame[i] == frame[j]) t.set(i, j, distance(*coords[i], *coords[j]));
    }
    return t;
  }

 private:
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) + j; }
  int n_{0};
  std::vector<double> d_;
};

struct TopoEdge {
  int i{0};
  int j{0};
  double d{0.0};       // km
  double snr_ij{0.0};  // dB, i transmitting
  double snr_ji{0.0};  // dB, j transmitting
  double snr() const { return std::min(snr_ij, snr_ji); }
};

struct IterationRecord {
  int iteration{0};
  double gap_db{0.0};       // mean over directed links of SNR at p_tmax minus SNR at assigned power
  double delta{0.0};
  double mean_snr_db{0.0};  // mean directed link SNR at assigned powers
  int admitted{0};          // edges admitted by the merge pass
  int edges{0};             // size of the edge set after the iteration
};

struct Topology {
  int n{0};
  std::vector<TopoEdge> edges;  // sorted by (i, j), i < j
  PowerAssignment powers;
  std::vector<IterationRecord> trace;
  int iterations{0};
  bool converged{true};
  std::vector<std::string> notes;  // pruned edges and other diagnostics
};

class NotConvergedError : public Error {
 public:
  explicit NotConvergedError(Topology t)
      : Error(ErrorCode::NotConverged, "MaxNTtop did not converge in " + std::to_string(t.iterations) + " iterations"),
        topology_(std::move(t)) {}
  const Topology& topology() const { return topology_; }

 private:
  Topology topology_;
};

namespace detail {

using EdgeSet = std::set<std::pair<int, int>>;

inline std::pair<int, int> ordered(int i, int j) { return i < j ? std::make_pair(i, j) : std::make_pair(j, i); }

/// Pairs with a known distance that p_tmax can serve in both directions.
inline EdgeSet candidate_pairs(const DistanceTable& t, const RadioParams& params) {
  EdgeSet out;
  const double cap = dbm_to_mw(params.p_tmax_dbm);
  for (int i = 0; i < t.size(); ++i)
    for (int j = i + 1; j < t.size(); ++j) {
      const double d = t.at(i, j);
      if (std::isnan(d) || !(d > kCoincidenceKm)) continue;
      if (required_power_mw(d, params.gain_model.gain(i, j), params) <= cap * (1.0 + 1e-12)) out.insert({i, j});
    }
  return out;
}

inline std::vector<RequiredLink> to_links(const EdgeSet& edges, const DistanceTable& t, const RadioParams& params) {
  std::vector<RequiredLink> links;
  links.reserve(edges.size());
  for (const auto& [i, j] : edges) links.push_back({i, j, t.at(i, j), params.gain_model.gain(i, j)});
  return links;
}

/// Closed-form LP; an infeasible edge is dropped and the solve repeated.
inline PowerAssignment assign_with_pruning(EdgeSet& edges, const DistanceTable& t, const RadioParams& params,
                                           std::vector<std::string>& notes) {
  while (true) {
    try {
      return assign_power_lp(to_links(edges, t, params), t.size(), params);
    } catch (const InfeasibleError& e) {
      edges.erase(ordered(e.from(), e.to()));
      notes.push_back(std::string("pruned: ") + e.what());
    }
  }
}

inline double directed_snr(const DistanceTable& t, const PowerAssignment& p, int from, int to,
                           const RadioParams& params) {
  return link_snr(t.at(from, to), p.p_t_dbm[from], params.gain_model.gain(from, to), params);
}

inline bool detectable_both(const DistanceTable& t, const PowerAssignment& p, int i, int j, const RadioParams& params) {
  const double h = params.gain_model.gain(i, j);
  return is_detectable(t.at(i, j), p.p_t_dbm[i], h, params) && is_detectable(t.at(i, j), p.p_t_dbm[j], h, params);
}

inline std::vector<TopoEdge> materialize(const EdgeSet& edges, const DistanceTable& t, const PowerAssignment& p,
                                         const RadioParams& params) {
  std::vector<TopoEdge> out;
  out.reserve(edges.size());
  for (const auto& [i, j] : edges)
    out.push_back({i, j, t.at(i, j), directed_snr(t, p, i, j, params), directed_snr(t, p, j, i, params)});
  return out;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[a] = b;
    return true;
  }
};

}  // namespace detail

/// Per-node local frame: the union of the members of every localization
/// patch containing the node.
inline std::vector<std::vector<int>> frames_from_patches(const PatchSet& set, int n) {
  std::vector<std::vector<int>> frames(static_cast<std::size_t>(n));
  for (int v = 0; v < n && v < static_cast<int>(set.node_to_patches.size()); ++v) {
    std::set<int> members;
    for (int k : set.node_to_patches[v]) members.insert(set.patches[k].members.begin(), set.patches[k].members.end());
    members.erase(v);
    frames[v].assign(members.begin(), members.end());
  }
  return frames;
}

struct MaxNtOptions {
  double eps{0.1};  // dB
  int max_iters{50};
  /// Local frames used when two patches are sewn; empty means the merge adds
  /// only the admitted edge.
  std::vector<std::vector<int>> frames;
};

/// Iterative power-minimal topology extraction. Each iteration assigns LP
/// powers to the current edge set, merges singleton classes along candidate
/// pairs in decreasing SNR order (sewing the two local frames together), and
/// then keeps every pair the new powers already serve in both directions.
/// Converges when the mean headroom below p_tmax stops moving by more than eps.
inline Topology max_nt_top(const DistanceTable& table, const RadioParams& params, const MaxNtOptions& opts = {}) {
  params.validate();
  if (!(opts.eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
  if (opts.max_iters < 1) throw Error(ErrorCode::InvalidArgument, "max_iters must be >= 1");
  const int n = table.size();
  Topology topo;
  topo.n = n;

  const auto candidates = detail::candidate_pairs(table, params);
  std::vector<std::vector<char>> is_candidate(static_cast<std::size_t>(n), std::vector<char>(n, 0));
  for (const auto& [i, j] : candidates) is_candidate[i][j] = is_candidate[j][i] = 1;

  detail::EdgeSet edges;
  for (int i = 0; i < n; ++i) {
    int best = -1;
    for (int j = 0; j < n; ++j)
      if (is_candidate[i][j] && (best < 0 || table.at(i, j) < table.at(i, best))) best = j;
    if (best >= 0) edges.insert(detail::ordered(i, best));
  }

  auto sew = [&](int a, int b) {
    if (static_cast<int>(opts.frames.size()) != n) return;
    for (int k : opts.frames[b])
      if (k != a && is_candidate[a][k]) edges.insert(detail::ordered(a, k));
  };

  PowerAssignment powers;
  double previous_gap = 0.0;
  for (int it = 1; it <= opts.max_iters; ++it) {
    powers = detail::assign_with_pruning(edges, table, params, topo.notes);

    struct Ranked {
      double snr;
      int i, j;
    };
    std::vector<Ranked> ranked;
    ranked.reserve(candidates.size());
    for (const auto& [i, j] : candidates)
      ranked.push_back({std::min(detail::directed_snr(table, powers, i, j, params),
                                 detail::directed_snr(table, powers, j, i, params)),
                        i, j});
    std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
      if (a.snr != b.snr) return a.snr > b.snr;
      return std::tie(a.i, a.j) < std::tie(b.i, b.j);
    });

    IterationRecord rec;
    rec.iteration = it;
    detail::UnionFind classes(n);
    for (const auto& r : ranked) {
      if (!classes.unite(r.i, r.j)) continue;
      if (edges.insert({r.i, r.j}).second) ++rec.admitted;
      sew(r.i, r.j);
      sew(r.j, r.i);
    }

    powers = detail::assign_with_pruning(edges, table, params, topo.notes);
    for (const auto& [i, j] : candidates)
      if (detail::detectable_both(table, powers, i, j, params)) edges.insert({i, j});

    double gap = 0.0, snr = 0.0;
    for (const auto& [i, j] : edges) {
      gap += 2.0 * params.p_tmax_dbm - powers.p_t_dbm[i] - powers.p_t_dbm[j];
      snr += detail::directed_snr(table, powers, i, j, params) + detail::directed_snr(table, powers, j, i, params);
    }
    const double links = 2.0 * static_cast<double>(edges.size());
    rec.gap_db = links > 0 ? gap / links : 0.0;
    rec.mean_snr_db = links > 0 ? snr / links : 0.0;
    rec.delta = edges.empty() ? 0.0 : (it == 1 ? 1.0 : std::abs(rec.gap_db - previous_gap));
    rec.edges = static_cast<int>(edges.size());
    previous_gap = rec.gap_db;
    topo.trace.push_back(rec);
    topo.iterations = it;
    if (rec.delta <= opts.eps) break;
  }

  topo.powers = std::move(powers);
  topo.edges = detail::materialize(edges, table, topo.powers, params);
  topo.converged = topo.trace.back().delta <= opts.eps;
  if (!topo.converged) throw NotConvergedError(std::move(topo));
  return topo;
}

/// Local minimum spanning tree: every node keeps the edges to its direct
/// neighbours in the MST of its own 1-hop neighbourhood.
inline Topology lmst(const DistanceTable& table, const RadioParams& params) {
  params.validate();
  const int n = table.size();
  const auto candidates = detail::candidate_pairs(table, params);
  std::vector<std::vector<int>> nbr(static_cast<std::size_t>(n));
  for (const auto& [i, j] : candidates) {
    nbr[i].push_back(j);
    nbr[j].push_back(i);
  }

  detail::EdgeSet kept;
  for (int u = 0; u < n; ++u) {
    std::vector<int> local = nbr[u];
    local.push_back(u);
    std::sort(local.begin(), local.end());
    std::vector<std::tuple<double, int, int>> local_edges;
    for (std::size_t a = 0; a < local.size(); ++a)
      for (std::size_t b = a + 1; b < local.size(); ++b)
        if (candidates.count({local[a], local[b]})) local_edges.emplace_back(table.at(local[a], local[b]), local[a], local[b]);
    std::sort(local_edges.begin(), local_edges.end());
    detail::UnionFind uf(n);
    for (const auto& [d, a, b] : local_edges)
      if (uf.unite(a, b) && (a == u || b == u)) kept.insert({a, b});
  }

  Topology topo;
  topo.n = n;
  topo.powers = detail::assign_with_pruning(kept, table, params, topo.notes);
  topo.edges = detail::materialize(kept, table, topo.powers, params);
  topo.iterations = 1;
  return topo;
}

/// Grid search per node: the lowest level floor + k * step_db at which every
/// graph neighbour is detectable, where the floor is the power that delivers
/// p_rmin to the nearest neighbour. The topology is every candidate pair the
/// chosen powers serve in both directions. `graph` defaults to all candidate
/// pairs.
inline Topology brute_force(const DistanceTable& table, const RadioParams& params, double step_db,
                            const std::vector<std::vector<int>>* graph = nullptr) {
  params.validate();
  if (!(step_db > 0.0)) throw Error(ErrorCode::InvalidArgument, "step_db must be positive");
  const int n = table.size();
  const auto candidates = detail::candidate_pairs(table, params);
  std::vector<std::vector<int>> nbr(static_cast<std::size_t>(n));
  if (graph) {
    for (int i = 0; i < n && i < static_cast<int>(graph->size()); ++i)
      for (int j : (*graph)[i])
        if (j != i && table.known(i, j) && table.at(i, j) > kCoincidenceKm) nbr[i].push_back(j);
  } else {
    for (const auto& [i, j] : candidates) {
      nbr[i].push_back(j);
      nbr[j].push_back(i);
    }
  }

  Topology topo;
  topo.n = n;
  topo.powers.p_t_dbm.assign(static_cast<std::size_t>(n), kPowerOff);
  for (int i = 0; i < n; ++i) {
    if (nbr[i].empty()) continue;
    double nearest = std::numeric_limits<double>::infinity();
    for (int j : nbr[i]) nearest = std::min(nearest, table.at(i, j));
    const double floor = params.p_rmin_dbm + 10.0 * params.nu * std::log10(nearest);
    auto reaches_all = [&](double p) {
      for (int j : nbr[i])
        if (!is_detectable(table.at(i, j), p, params.gain_model.gain(i, j), params)) return false;
      return true;
    };
    // Jump to the first grid level at or above the closed-form requirement,
    // then walk the grid to absorb rounding.
    double need = -std::numeric_limits<double>::infinity();
    for (int j : nbr[i]) need = std::max(need, mw_to_dbm(required_power_mw(table.at(i, j), params.gain_model.gain(i, j), params)));
    long k = std::max(0L, static_cast<long>(std::ceil((need - floor) / step_db - 1e-9)) - 1);
    double level = floor + static_cast<double>(k) * step_db;
    while (!reaches_all(level) && level <= params.p_tmax_dbm) level = floor + static_cast<double>(++k) * step_db;
    if (level > params.p_tmax_dbm) {
      // The grid may step over p_tmax itself; the cap is the last level.
      const bool ok = reaches_all(params.p_tmax_dbm);
      level = params.p_tmax_dbm;
      if (!ok) topo.notes.push_back("infeasible: node " + std::to_string(i) + " cannot reach every graph neighbour at p_tmax");
    }
    topo.powers.p_t_dbm[i] = level;
  }

  detail::EdgeSet edges;
  for (const auto& [i, j] : candidates)
    if (detail::detectable_both(table, topo.powers, i, j, params)) edges.insert({i, j});
  topo.edges = detail::materialize(edges, table, topo.powers, params);
  topo.iterations = 1;
  return topo;
}

inline double avg_node_degree(const Topology& t) {
  if (t.n <= 0) throw Error(ErrorCode::EmptyNetwork, "average degree of an empty network");
  return 2.0 * static_cast<double>(t.edges.size()) / static_cast<double>(t.n);
}

struct Throughput {
  double total_bps{0.0};
  double per_link_bps{0.0};
  int matched{0};
  double mean_matched_snr_db{0.0};
};

/// Greedy maximum-weight matching on link rate, ties by higher SNR and then
/// by smaller index pair. Only matched links transmit concurrently.
inline Throughput network_throughput(const Topology& t, const RadioParams& params) {
  struct Weighted {
    double rate, snr;
    int i, j;
  };
  std::vector<Weighted> w;
  w.reserve(t.edges.size());
  for (const auto& e : t.edges) w.push_back({link_rate_bps(e.snr(), params), e.snr(), e.i, e.j});
  std::sort(w.begin(), w.end(), [](const Weighted& a, const Weighted& b) {
    if (a.rate != b.rate) return a.rate > b.rate;
    if (a.snr != b.snr) return a.snr > b.snr;  // capped rates tie; prefer the stronger link
    return std::tie(a.i, a.j) < std::tie(b.i, b.j);
  });
  std::vector<char> busy(static_cast<std::size_t>(std::max(t.n, 0)), 0);
  Throughput out;
  double snr_sum = 0.0;
  for (const auto& e : w) {
    if (busy[e.i] || busy[e.j] || e.rate <= 0.0) continue;
    busy[e.i] = busy[e.j] = 1;
    out.total_bps += e.rate;
    snr_sum += e.snr;
    ++out.matched;
  }
  if (out.matched > 0) {
    out.per_link_bps = out.total_bps / out.matched;
    out.mean_matched_snr_db = snr_sum / out.matched;
  }
  return out;
}

/// Recomputes edge SNRs from another distance table (ground truth in
/// simulation); the edge set and powers are unchanged.
inline Topology rescore(Topology t, const DistanceTable& truth, const RadioParams& params) {
  for (auto& e : t.edges) {
    e.d = truth.at(e.i, e.j);
    e.snr_ij = detail::directed_snr(truth, t.powers, e.i, e.j, params);
    e.snr_ji = detail::directed_snr(truth, t.powers, e.j, e.i, params);
  }
  return t;
}

}  // namespace maxnt

#endif  // MAXNT_TOPO_HPP
