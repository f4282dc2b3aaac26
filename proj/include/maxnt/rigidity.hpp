#ifndef MAXNT_RIGIDITY_HPP
#define MAXNT_RIGIDITY_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <unordered_map>
#include <utility>
#include <vector>

#include "maxnt/error.hpp"
#include "maxnt/geometry.hpp"
#include "maxnt/scenario.hpp"

namespace maxnt {

/// Simple undirected graph on vertices 0..n-1, used for combinatorial tests.
struct Graph {
  int n{0};
  std::vector<std::pair<int, int>> edges;
};

/// (2,3) pebble game. Each vertex starts with two pebbles; an edge is
/// independent iff four pebbles can be gathered on its endpoints.
class PebbleGame {
 public:
  explicit PebbleGame(int n)
      : pebbles_(static_cast<std::size_t>(n), 2), out_(static_cast<std::size_t>(n)) {}

  /// Returns true and inserts the edge when it is independent of the edges
  /// accepted so far.
  bool add_edge(int u, int v) {
    if (u == v) return false;
    while (pebbles_[u] < 2) {
      if (!gather(u, v)) return false;
    }
    while (pebbles_[v] < 2) {
      if (!gather(v, u)) return false;
    }
    --pebbles_[u];
    out_[u].push_back(v);
    ++accepted_;
    return true;
  }

  int accepted() const noexcept { return accepted_; }

 private:
  // Moves one free pebble onto `target` by reversing a directed path, never
  // touching `blocked`.
  bool gather(int target, int blocked) {
    const std::size_t n = pebbles_.size();
    std::vector<int> parent(n, -1);
    std::vector<char> seen(n, 0);
    seen[target] = 1;
    seen[blocked] = 1;
    std::vector<int> stack{target};
    int found = -1;
    while (!stack.empty() && found < 0) {
      const int x = stack.back();
      stack.pop_back();
      for (int y : out_[x]) {
        if (seen[y]) continue;
        seen[y] = 1;
        parent[y] = x;
        if (pebbles_[y] > 0) {
          found = y;
          break;
        }
        stack.push_back(y);
      }
    }
    if (found < 0) return false;
    for (int y = found; y != target;) {
      const int x = parent[y];
      auto& ox = out_[x];
      ox.erase(std::find(ox.begin(), ox.end(), y));
      out_[y].push_back(x);
      y = x;
    }
    --pebbles_[found];
    ++pebbles_[target];
    return true;
  }

  std::vector<int> pebbles_;
  std::vector<std::vector<int>> out_;
  int accepted_{0};
};

/// Mask of edges accepted by the pebble game in input order.
inline std::vector<char> independent_edges(const Graph& g) {
  PebbleGame game(g.n);
  std::vector<char> mask(g.edges.size(), 0);
  for (std::size_t k = 0; k < g.edges.size(); ++k)
    mask[k] = game.add_edge(g.edges[k].first, g.edges[k].second) ? 1 : 0;
  return mask;
}

inline int rigidity_rank(const Graph& g) {
  PebbleGame game(g.n);
  for (const auto& [u, v] : g.edges) game.add_edge(u, v);
  return game.accepted();
}

/// Generic rigidity in the plane.
inline bool is_rigid(const Graph& g) {
  if (g.n <= 1) return true;
  return rigidity_rank(g) == 2 * g.n - 3;
}

/// Rigid, and still rigid after removing any single edge. Only edges of a
/// pebble-game basis need checking; removing any other edge keeps the basis.
inline bool is_redundantly_rigid(const Graph& g) {
  if (g.n <= 1) return true;
  const auto basis = independent_edges(g);
  if (std::count(basis.begin(), basis.end(), 1) != 2 * g.n - 3) return false;
  for (std::size_t skip = 0; skip < g.edges.size(); ++skip) {
    if (!basis[skip]) continue;
    PebbleGame game(g.n);
    for (std::size_t k = 0; k < g.edges.size(); ++k) {
      if (k != skip) game.add_edge(g.edges[k].first, g.edges[k].second);
    }
    if (game.accepted() != 2 * g.n - 3) return false;
  }
  return true;
}

/// Vertex connectivity >= 3: for n >= 4 the graph stays connected after the
/// removal of every vertex pair.
inline bool is_three_connected(const Graph& g) {
  if (g.n < 4) return false;
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(g.n));
  for (const auto& [u, v] : g.edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  std::vector<int> mark(static_cast<std::size_t>(g.n));
  std::vector<int> stack;
  int stamp = 0;
  for (int a = 0; a < g.n; ++a) {
    for (int b = a + 1; b < g.n; ++b) {
      ++stamp;
      mark[a] = stamp;
      mark[b] = stamp;
      int start = 0;
      while (start == a || start == b) ++start;
      mark[start] = stamp;
      stack.assign(1, start);
      int reached = 1;
      while (!stack.empty()) {
        const int x = stack.back();
        stack.pop_back();
        for (int y : adj[x]) {
          if (mark[y] == stamp) continue;
          mark[y] = stamp;
          ++reached;
          stack.push_back(y);
        }
      }
      if (reached != g.n - 2) return false;
    }
  }
  return true;
}

/// Generic global rigidity in the plane: complete graphs on <= 3 vertices, or
/// 3-connected and redundantly rigid.
inline bool is_globally_rigid(const Graph& g) {
  if (g.n <= 3) {
    std::set<std::pair<int, int>> distinct;
    for (auto [u, v] : g.edges) {
      if (u == v) continue;
      distinct.insert({std::min(u, v), std::max(u, v)});
    }
    return static_cast<int>(distinct.size()) == g.n * (g.n - 1) / 2;
  }
  return is_three_connected(g) && is_redundantly_rigid(g);
}

/// A globally rigid subgraph with (optionally) its local embedding.
struct Patch {
  int patch_id{0};
  std::vector<int> members;              // sorted global node indices
  std::vector<Measurement> local_edges;  // global indices, i < j
  std::optional<std::vector<Point>> local_coords;

  /// Position of a global node inside `members`, or -1.
  int local_index(int node) const {
    auto it = std::lower_bound(members.begin(), members.end(), node);
    if (it == members.end() || *it != node) return -1;
    return static_cast<int>(it - members.begin());
  }

  /// Local-index graph of the patch edges.
  Graph local_graph() const {
    Graph g;
    g.n = static_cast<int>(members.size());
    for (const auto& e : local_edges) g.edges.emplace_back(local_index(e.i), local_index(e.j));
    return g;
  }
};

struct PatchSet {
  std::vector<Patch> patches;
  std::vector<std::vector<int>> node_to_patches;  // indexed by global node
  std::vector<int> unlocalizable;                 // nodes covered by no patch
  std::vector<std::pair<int, int>> adjacency;     // patch pairs sharing >= 3 nodes

  int node_count() const { return static_cast<int>(node_to_patches.size()); }
};

inline constexpr int kMinSharedForAlignment = 3;

inline std::vector<int> shared_members(const Patch& a, const Patch& b) {
  std::vector<int> out;
  std::set_intersection(a.members.begin(), a.members.end(), b.members.begin(), b.members.end(),
                        std::back_inserter(out));
  return out;
}

namespace detail {

inline std::uint64_t pair_key(int i, int j) {
  if (i > j) std::swap(i, j);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(i)) << 32) |
         static_cast<std::uint32_t>(j);
}

/// Distance lookup over the measured edges.
class EdgeIndex {
 public:
  explicit EdgeIndex(const std::vector<Measurement>& edges) {
    map_.reserve(edges.size() * 2);
    for (const auto& e : edges) map_[pair_key(e.i, e.j)] = e.d;
  }

  std::optional<double> find(int i, int j) const {
    auto it = map_.find(pair_key(i, j));
    if (it == map_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::unordered_map<std::uint64_t, double> map_;
};

inline std::vector<Measurement> induced_edges(const std::vector<int>& members, const EdgeIndex& index) {
  std::vector<Measurement> out;
  for (std::size_t a = 0; a < members.size(); ++a) {
    for (std::size_t b = a + 1; b < members.size(); ++b) {
      if (auto d = index.find(members[a], members[b])) out.push_back({members[a], members[b], *d});
    }
  }
  return out;
}

inline Graph local_graph(const std::vector<int>& members, const std::vector<Measurement>& edges) {
  Graph g;
  g.n = static_cast<int>(members.size());
  auto pos = [&](int node) {
    return static_cast<int>(std::lower_bound(members.begin(), members.end(), node) - members.begin());
  };
  for (const auto& e : edges) g.edges.emplace_back(pos(e.i), pos(e.j));
  return g;
}

}  // namespace detail

/// Fills node_to_patches, unlocalizable and the patch adjacency from members.
inline void index_patches(PatchSet& set, int node_count) {
  set.node_to_patches.assign(static_cast<std::size_t>(node_count), {});
  for (const auto& p : set.patches)
    for (int v : p.members) set.node_to_patches[v].push_back(p.patch_id);
  set.unlocalizable.clear();
  for (int v = 0; v < node_count; ++v)
    if (set.node_to_patches[v].empty()) set.unlocalizable.push_back(v);
  set.adjacency.clear();
  for (std::size_t k = 0; k < set.patches.size(); ++k) {
    for (std::size_t l = k + 1; l < set.patches.size(); ++l) {
      if (static_cast<int>(shared_members(set.patches[k], set.patches[l]).size()) >= kMinSharedForAlignment)
        set.adjacency.emplace_back(static_cast<int>(k), static_cast<int>(l));
    }
  }
}

/// Splits the measurement graph into globally rigid patches, one candidate per
/// closed 1-hop neighborhood. A non-rigid candidate loses its minimum-degree
/// member (ties to the smaller index) until it is globally rigid or has fewer
/// than three members. Identical member sets are emitted once.
inline PatchSet decompose(const MeasurementGraph& mg) {
  const detail::EdgeIndex index(mg.edges);
  const auto adj = mg.adjacency();
  std::map<std::vector<int>, bool> verdicts;
  std::set<std::vector<int>> emitted;
  PatchSet set;

  for (int center = 0; center < mg.node_count; ++center) {
    std::vector<int> members = adj[center];
    members.push_back(center);
    std::sort(members.begin(), members.end());

    while (members.size() >= 3) {
      auto edges = detail::induced_edges(members, index);
      auto cached = verdicts.find(members);
      bool rigid;
      if (cached != verdicts.end()) {
        rigid = cached->second;
      } else {
        rigid = is_globally_rigid(detail::local_graph(members, edges));
        verdicts.emplace(members, rigid);
      }
      if (rigid) {
        if (emitted.insert(members).second) {
          Patch p;
          p.patch_id = static_cast<int>(set.patches.size());
          p.members = members;
          p.local_edges = std::move(edges);
          set.patches.push_back(std::move(p));
        }
        break;
      }
      std::vector<int> degree(members.size(), 0);
      for (const auto& e : edges) {
        ++degree[std::lower_bound(members.begin(), members.end(), e.i) - members.begin()];
        ++degree[std::lower_bound(members.begin(), members.end(), e.j) - members.begin()];
      }
      // members is sorted, so min_element picks the smallest index on ties.
      members.erase(members.begin() + (std::min_element(degree.begin(), degree.end()) - degree.begin()));
    }
  }

  if (set.patches.empty())
    throw Error(ErrorCode::UnlocalizableGraph, "no globally rigid patch in the measurement graph");
  index_patches(set, mg.node_count);
  return set;
}

}  // namespace maxnt

#endif  // MAXNT_RIGIDITY_HPP
