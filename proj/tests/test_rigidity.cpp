#include <gtest/gtest.h>

#include <queue>
#include <random>

#include "maxnt/rigidity.hpp"

using namespace maxnt;

namespace {

Graph complete(int n) {
  Graph g{n, {}};
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) g.edges.push_back({i, j});
  return g;
}

Graph cycle(int n) {
  Graph g{n, {}};
  for (int i = 0; i < n; ++i) g.edges.push_back({i, (i + 1) % n});
  return g;
}

// Hub 0 joined to a rim cycle 1..n-1.
Graph wheel(int n) {
  Graph g{n, {}};
  for (int i = 1; i < n; ++i) {
    g.edges.push_back({0, i});
    g.edges.push_back({i, i == n - 1 ? 1 : i + 1});
  }
  return g;
}

// Exhaustive Laman check: rigid iff some 2n-3 edge subset has every vertex
// subset of size k >= 2 spanning at most 2k-3 of its edges.
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

// Vertex connectivity via unit-capacity max-flow on the split-vertex network;
// 3-connected iff every non-adjacent pair has >= 3 vertex-disjoint paths and
// n >= 4.
int vertex_disjoint_paths(const Graph& g, int s, int t) {
  const int N = 2 * g.n;
  std::vector<std::vector<int>> cap(N, std::vector<int>(N, 0));
  for (int v = 0; v < g.n; ++v) cap[2 * v][2 * v + 1] = (v == s || v == t) ? 1000 : 1;
  for (const auto& [u, v] : g.edges) {
    cap[2 * u + 1][2 * v] = 1000;
    cap[2 * v + 1][2 * u] = 1000;
  }
  const int src = 2 * s + 1, dst = 2 * t;
  int flow = 0;
  while (true) {
    std::vector<int> prev(N, -1);
    prev[src] = src;
    std::queue<int> q;
    q.push(src);
    while (!q.empty() && prev[dst] < 0) {
      const int x = q.front();
      q.pop();
      for (int y = 0; y < N; ++y)
        if (prev[y] < 0 && cap[x][y] > 0) {
          prev[y] = x;
          q.push(y);
        }
    }
    if (prev[dst] < 0) return flow;
    for (int y = dst; y != src; y = prev[y]) {
      --cap[prev[y]][y];
      ++cap[y][prev[y]];
    }
    ++flow;
  }
}

bool maxflow_three_connected(const Graph& g) {
  if (g.n < 4) return false;
  std::set<std::pair<int, int>> adjacent;
  for (const auto& [u, v] : g.edges) adjacent.insert({std::min(u, v), std::max(u, v)});
  for (int s = 0; s < g.n; ++s)
    for (int t = s + 1; t < g.n; ++t)
      if (!adjacent.count({s, t}) && vertex_disjoint_paths(g, s, t) < 3) return false;
  return true;
}

MeasurementGraph as_measurements(const Graph& g) {
  MeasurementGraph mg;
  mg.node_count = g.n;
  for (const auto& [u, v] : g.edges) mg.edges.push_back({std::min(u, v), std::max(u, v), 1.0});
  return mg;
}

}  // namespace

TEST(IsRigid, TriangleIsRigid) { EXPECT_TRUE(is_rigid(complete(3))); }

TEST(IsRigid, QuadrilateralFlexes) { EXPECT_FALSE(is_rigid(cycle(4))); }

TEST(IsRigid, SixNodesNineIndependentEdgesMatchesLaman) {
  // Triangular prism: two triangles joined by three rungs, minimally rigid.
  Graph prism{6, {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}, {0, 3}, {1, 4}, {2, 5}}};
  EXPECT_EQ(is_rigid(prism), laman_rigid(prism));
  EXPECT_TRUE(is_rigid(prism));
  // Same triangles joined by three bars, two of them sharing an endpoint.
  Graph fan{6, {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}, {0, 3}, {1, 4}, {0, 4}}};
  EXPECT_EQ(is_rigid(fan), laman_rigid(fan));
}

TEST(IsRigid, AgreesWithExhaustiveLamanOnRandomGraphs) {
  std::mt19937_64 rng(2024);
  int disagreements = 0, rigid_count = 0, total = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 5);  // 2..6
    Graph g{n, {}};
    std::bernoulli_distribution keep(0.35 + 0.5 * static_cast<double>(rng() % 100) / 100.0);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (keep(rng)) g.edges.push_back({i, j});
    std::shuffle(g.edges.begin(), g.edges.end(), rng);
    const bool pebble = is_rigid(g);
    disagreements += pebble != laman_rigid(g) ? 1 : 0;
    rigid_count += pebble ? 1 : 0;
    ++total;
  }
  EXPECT_EQ(disagreements, 0);
  EXPECT_GE(total, 200);
  EXPECT_GT(rigid_count, 30);
  EXPECT_LT(rigid_count, total - 30);
}

TEST(IsGloballyRigid, CompleteGraphK4) { EXPECT_TRUE(is_globally_rigid(complete(4))); }

TEST(IsGloballyRigid, K4MinusEdgeFailsRedundancy) {
  Graph g = complete(4);
  g.edges.pop_back();
  EXPECT_TRUE(is_rigid(g));
  EXPECT_FALSE(is_redundantly_rigid(g));
  EXPECT_FALSE(is_globally_rigid(g));
}

TEST(IsGloballyRigid, WheelW5) {
  const Graph w = wheel(5);
  EXPECT_TRUE(maxflow_three_connected(w));
  EXPECT_TRUE(is_three_connected(w));
  // Per-edge removal keeps rigidity.
  for (std::size_t skip = 0; skip < w.edges.size(); ++skip) {
    Graph h{w.n, {}};
    for (std::size_t k = 0; k < w.edges.size(); ++k)
      if (k != skip) h.edges.push_back(w.edges[k]);
    EXPECT_TRUE(is_rigid(h));
  }
  EXPECT_TRUE(is_globally_rigid(w));
}

TEST(IsGloballyRigid, SmallGraphsNeedCompleteness) {
  EXPECT_TRUE(is_globally_rigid(complete(1)));
  EXPECT_TRUE(is_globally_rigid(complete(2)));
  EXPECT_TRUE(is_globally_rigid(complete(3)));
  EXPECT_FALSE(is_globally_rigid(Graph{3, {{0, 1}, {1, 2}}}));
}

TEST(IsThreeConnected, MatchesMaxFlowOracle) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 150; ++trial) {
    const int n = 4 + static_cast<int>(rng() % 4);
    Graph g{n, {}};
    std::bernoulli_distribution keep(0.6);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (keep(rng)) g.edges.push_back({i, j});
    EXPECT_EQ(is_three_connected(g), maxflow_three_connected(g)) << "trial " << trial;
  }
}

TEST(Decompose, K5GivesSinglePatch) {
  const auto set = decompose(as_measurements(complete(5)));
  ASSERT_EQ(set.patches.size(), 1u);
  EXPECT_EQ(set.patches[0].members, (std::vector<int>{0, 1, 2, 3, 4}));
  EXPECT_EQ(set.patches[0].local_edges.size(), 10u);
  EXPECT_TRUE(set.unlocalizable.empty());
  EXPECT_TRUE(set.adjacency.empty());
}

TEST(Decompose, PathIsUnlocalizable) {
  Graph path{5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}}};
  try {
    decompose(as_measurements(path));
    FAIL() << "expected UnlocalizableGraph";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnlocalizableGraph);
  }
}

TEST(Decompose, TwoK4sSharingThreeNodes) {
  // K4 on {0,1,2,3} and K4 on {1,2,3,4}. The shared nodes see all five nodes,
  // and K5 minus edge (0,4) is 3-connected and redundantly rigid, so their
  // neighbourhood survives as a third patch.
  Graph g{5, {}};
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) g.edges.push_back({i, j});
  for (int i = 1; i < 4; ++i) g.edges.push_back({i, 4});
  const auto set = decompose(as_measurements(g));
  std::vector<std::vector<int>> members;
  for (const auto& p : set.patches) members.push_back(p.members);
  ASSERT_EQ(members.size(), 3u);
  EXPECT_EQ(members[0], (std::vector<int>{0, 1, 2, 3}));
  EXPECT_EQ(members[1], (std::vector<int>{0, 1, 2, 3, 4}));
  EXPECT_EQ(members[2], (std::vector<int>{1, 2, 3, 4}));
  EXPECT_EQ(shared_members(set.patches[0], set.patches[2]), (std::vector<int>{1, 2, 3}));
  const std::vector<std::pair<int, int>> expected_adj{{0, 1}, {0, 2}, {1, 2}};
  EXPECT_EQ(set.adjacency, expected_adj);
}

TEST(Decompose, PatchesAreGloballyRigidAndIndexed) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MeasurementGraph mg;
  mg.node_count = 40;
  std::vector<Point> pts;
  for (int i = 0; i < mg.node_count; ++i) pts.push_back({u(rng), u(rng)});
  for (int i = 0; i < mg.node_count; ++i)
    for (int j = i + 1; j < mg.node_count; ++j)
      if (distance(pts[i], pts[j]) <= 0.3) mg.edges.push_back({i, j, distance(pts[i], pts[j])});
  const auto set = decompose(mg);
  ASSERT_FALSE(set.patches.empty());
  for (const auto& p : set.patches) {
    EXPECT_GE(p.members.size(), 3u);
    EXPECT_TRUE(std::is_sorted(p.members.begin(), p.members.end()));
    EXPECT_TRUE(is_globally_rigid(p.local_graph()));
    for (const auto& e : p.local_edges) {
      EXPECT_TRUE(std::binary_search(p.members.begin(), p.members.end(), e.i));
      EXPECT_TRUE(std::binary_search(p.members.begin(), p.members.end(), e.j));
    }
  }
  // node_to_patches is consistent with members; uncovered nodes are listed.
  for (int v = 0; v < mg.node_count; ++v) {
    for (int k : set.node_to_patches[v])
      EXPECT_TRUE(std::binary_search(set.patches[k].members.begin(), set.patches[k].members.end(), v));
    const bool listed = std::find(set.unlocalizable.begin(), set.unlocalizable.end(), v) != set.unlocalizable.end();
    EXPECT_EQ(listed, set.node_to_patches[v].empty());
  }
  for (const auto& [k, l] : set.adjacency)
    EXPECT_GE(shared_members(set.patches[k], set.patches[l]).size(), 3u);
  // Deterministic.
  const auto again = decompose(mg);
  ASSERT_EQ(again.patches.size(), set.patches.size());
  for (std::size_t k = 0; k < set.patches.size(); ++k) EXPECT_EQ(again.patches[k].members, set.patches[k].members);
}
