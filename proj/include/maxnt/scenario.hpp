#ifndef MAXNT_SCENARIO_HPP
#define MAXNT_SCENARIO_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "maxnt/error.hpp"
#include "maxnt/geometry.hpp"

namespace maxnt {

struct Annulus {
  Point center{};
  double inner_km{0.0};
  double outer_km{1.0};
};

struct Rectangle {
  double width_km{1.0};
  double height_km{1.0};
};

using Region = std::variant<Annulus, Rectangle>;

/// Synthetic node placement. Positions are ground truth and are only read by
/// the generators and the evaluation code, never by the solvers.
struct Deployment {
  int node_count{0};
  std::vector<Point> positions;
  Region region{Rectangle{}};
  std::uint64_t seed{0};
  bool has_gateway{false};  // node 0 at the annulus center
};

struct Measurement {
  int i{0};
  int j{0};
  double d{0.0};  // km

  friend bool operator==(const Measurement&, const Measurement&) = default;
};

/// Noisy pairwise distances; one entry per unordered pair with i < j.
struct MeasurementGraph {
  int node_count{0};
  std::vector<Measurement> edges;
  double sensing_range{0.0};
  double noise_factor{0.0};

  std::vector<std::vector<int>> adjacency() const {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(node_count));
    for (const auto& e : edges) {
      adj[e.i].push_back(e.j);
      adj[e.j].push_back(e.i);
    }
    for (auto& a : adj) std::sort(a.begin(), a.end());
    return adj;
  }

  std::vector<int> degrees() const {
    std::vector<int> deg(static_cast<std::size_t>(node_count), 0);
    for (const auto& e : edges) {
      ++deg[e.i];
      ++deg[e.j];
    }
    return deg;
  }
};

/// Gateway at the center (index 0), remaining nodes uniform by area on the
/// annulus inner_km <= r <= outer_km.
inline Deployment generate_annulus(int n, double inner_km, double outer_km, std::uint64_t seed,
                                   Point center = {}) {
  if (n <= 0) throw Error(ErrorCode::InvalidCount, "node count must be positive");
  if (!(inner_km >= 0.0) || !(inner_km < outer_km) || !std::isfinite(outer_km))
    throw Error(ErrorCode::InvalidRegion, "annulus needs 0 <= inner_km < outer_km");

  Deployment dep;
  dep.node_count = n;
  dep.region = Annulus{center, inner_km, outer_km};
  dep.seed = seed;
  dep.has_gateway = true;
  dep.positions.reserve(static_cast<std::size_t>(n));
  dep.positions.push_back(center);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double r0 = inner_km * inner_km;
  const double r1 = outer_km * outer_km;
  for (int k = 1; k < n; ++k) {
    const double radius = std::sqrt(r0 + unit(rng) * (r1 - r0));
    const double angle = kTwoPi * unit(rng);
    dep.positions.push_back({center.x + radius * std::cos(angle), center.y + radius * std::sin(angle)});
  }
  return dep;
}

inline Deployment generate_rectangle(int n, double width_km, double height_km, std::uint64_t seed) {
  if (n <= 0) throw Error(ErrorCode::InvalidCount, "node count must be positive");
  if (!(width_km > 0.0) || !(height_km > 0.0) || !std::isfinite(width_km) || !std::isfinite(height_km))
    throw Error(ErrorCode::InvalidRegion, "rectangle dimensions must be positive");

  Deployment dep;
  dep.node_count = n;
  dep.region = Rectangle{width_km, height_km};
  dep.seed = seed;
  dep.positions.reserve(static_cast<std::size_t>(n));

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, width_km);
  std::uniform_real_distribution<double> uy(0.0, height_km);
  for (int k = 0; k < n; ++k) {
    const double x = ux(rng);
    const double y = uy(rng);
    dep.positions.push_back({x, y});
  }
  return dep;
}

/// Builds the measurement graph: pair (i, j) is measured iff its true distance
/// is within sensing_range. Measured distance is true * (1 + eta * g) with g
/// standard normal, redrawn until positive.
inline MeasurementGraph measure(const Deployment& dep, double sensing_range, double noise_factor,
                                std::uint64_t seed) {
  if (!(sensing_range > 0.0))
    throw Error(ErrorCode::InvalidArgument, "sensing range must be positive");
  if (!(noise_factor >= 0.0) || !std::isfinite(noise_factor))
    throw Error(ErrorCode::InvalidArgument, "noise factor must be finite and >= 0");

  MeasurementGraph mg;
  mg.node_count = dep.node_count;
  mg.sensing_range = sensing_range;
  mg.noise_factor = noise_factor;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 0; i < dep.node_count; ++i) {
    for (int j = i + 1; j < dep.node_count; ++j) {
      const double truth = distance(dep.positions[i], dep.positions[j]);
      if (truth > sensing_range) continue;
      // Coincident nodes cannot produce a positive distance measurement.
      if (!(truth > 0.0)) continue;
      double d = truth;
      if (noise_factor > 0.0) {
        do {
          d = truth * (1.0 + noise_factor * gauss(rng));
        } while (!(d > 0.0));
      }
      mg.edges.push_back({i, j, d});
    }
  }
  return mg;
}

}  // namespace maxnt

#endif  // MAXNT_SCENARIO_HPP
