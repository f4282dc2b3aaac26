#ifndef MAXNT_EMBED_HPP
#define MAXNT_EMBED_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "maxnt/error.hpp"
#include "maxnt/geometry.hpp"
#include "maxnt/rigidity.hpp"

namespace maxnt {

/// Distances below this are treated as coincident points (km).
inline constexpr double kCoincidenceKm = 1e-9;

enum class LowerBoundRule {
  MaxIncident,  // max of the longest edge at either endpoint, clamped to the upper bound
  Triangle,     // max over common neighbors k of |d_ik - d_jk|
};

struct CompletedDistances {
  int size{0};
  Eigen::MatrixXd d;      // symmetric, zero diagonal
  Eigen::MatrixXd lower;  // equals d on measured entries
  Eigen::MatrixXd upper;  // equals d on measured entries
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> completed;  // true on estimated entries
};

/// Fills every unmeasured pair of a patch with the midpoint of an upper bound
/// (shortest two-hop path through a common neighbor, falling back to the
/// shortest path) and a lower bound (see LowerBoundRule).
inline CompletedDistances complete_distances(const Patch& patch,
                                             LowerBoundRule rule = LowerBoundRule::MaxIncident) {
  const int m = static_cast<int>(patch.members.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();

  Eigen::MatrixXd measured = Eigen::MatrixXd::Constant(m, m, nan);
  Eigen::VectorXd longest = Eigen::VectorXd::Zero(m);
  for (const auto& e : patch.local_edges) {
    const int a = patch.local_index(e.i);
    const int b = patch.local_index(e.j);
    if (a < 0 || b < 0) throw Error(ErrorCode::InvalidArgument, "patch edge endpoint outside members");
    measured(a, b) = measured(b, a) = e.d;
    longest(a) = std::max(longest(a), e.d);
    longest(b) = std::max(longest(b), e.d);
  }

  // All-pairs shortest paths over measured edges (patches are small).
  Eigen::MatrixXd sp = Eigen::MatrixXd::Constant(m, m, inf);
  for (int a = 0; a < m; ++a) {
    sp(a, a) = 0.0;
    for (int b = 0; b < m; ++b)
      if (!std::isnan(measured(a, b))) sp(a, b) = measured(a, b);
  }
  for (int k = 0; k < m; ++k)
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) sp(a, b) = std::min(sp(a, b), sp(a, k) + sp(k, b));

  CompletedDistances cd;
  cd.size = m;
  cd.d = Eigen::MatrixXd::Zero(m, m);
  cd.lower = Eigen::MatrixXd::Zero(m, m);
  cd.upper = Eigen::MatrixXd::Zero(m, m);
  cd.completed = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(m, m, false);

  for (int a = 0; a < m; ++a) {
    for (int b = a + 1; b < m; ++b) {
      if (!std::isnan(measured(a, b))) {
        cd.d(a, b) = cd.d(b, a) = measured(a, b);
        cd.lower(a, b) = cd.lower(b, a) = measured(a, b);
        cd.upper(a, b) = cd.upper(b, a) = measured(a, b);
        continue;
      }
      if (!std::isfinite(sp(a, b)))
        throw Error(ErrorCode::DisconnectedPatch, "patch has a pair with no connecting path");

      double upper = inf;
      double triangle = 0.0;
      for (int k = 0; k < m; ++k) {
        if (std::isnan(measured(a, k)) || std::isnan(measured(b, k))) continue;
        upper = std::min(upper, measured(a, k) + measured(b, k));
        triangle = std::max(triangle, std::abs(measured(a, k) - measured(b, k)));
      }
      if (!std::isfinite(upper)) upper = sp(a, b);
      double lower = rule == LowerBoundRule::MaxIncident ? std::max(longest(a), longest(b)) : triangle;
      lower = std::min(lower, upper);

      cd.d(a, b) = cd.d(b, a) = 0.5 * (lower + upper);
      cd.lower(a, b) = cd.lower(b, a) = lower;
      cd.upper(a, b) = cd.upper(b, a) = upper;
      cd.completed(a, b) = cd.completed(b, a) = true;
    }
  }
  return cd;
}

struct MdsDecomposition {
  Eigen::MatrixXd gram;
  Eigen::VectorXd eigenvalues;   // descending
  Eigen::MatrixXd eigenvectors;  // columns match eigenvalues
  int rank_used{2};
  std::vector<Point> coords;
};

/// Classical scaling: double-center the squared distances and keep the two
/// leading eigenpairs. Negative eigenvalues are clamped to zero.
inline MdsDecomposition classical_mds(const Eigen::MatrixXd& d) {
  const auto n = d.rows();
  if (n == 0 || d.cols() != n) throw Error(ErrorCode::InvalidArgument, "distance matrix must be square and nonempty");

  const Eigen::MatrixXd squared = d.array().square().matrix();
  const Eigen::MatrixXd centering =
      Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));

  MdsDecomposition mds;
  mds.gram = -0.5 * centering * squared * centering;
  mds.gram = 0.5 * (mds.gram + mds.gram.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(mds.gram);
  mds.eigenvalues = solver.eigenvalues().reverse();
  mds.eigenvectors = solver.eigenvectors().rowwise().reverse();

  const double top = mds.eigenvalues(0);
  const double second = n > 1 ? mds.eigenvalues(1) : 0.0;
  if (top <= kCoincidenceKm * kCoincidenceKm && second <= kCoincidenceKm * kCoincidenceKm)
    throw Error(ErrorCode::DegenerateConfiguration, "all points coincide");

  mds.coords.resize(static_cast<std::size_t>(n));
  const double s0 = std::sqrt(std::max(top, 0.0));
  const double s1 = std::sqrt(std::max(second, 0.0));
  for (Eigen::Index k = 0; k < n; ++k) {
    mds.coords[k].x = s0 * mds.eigenvectors(k, 0);
    mds.coords[k].y = n > 1 ? s1 * mds.eigenvectors(k, 1) : 0.0;
  }
  return mds;
}

inline MdsDecomposition classical_mds(const CompletedDistances& cd) { return classical_mds(cd.d); }

/// Raw stress over the measured patch edges: sum of (|p_i - p_j| - d_ij)^2.
inline double raw_stress(const std::vector<Point>& coords, const Patch& patch) {
  double s = 0.0;
  for (const auto& e : patch.local_edges) {
    const double r = distance(coords[patch.local_index(e.i)], coords[patch.local_index(e.j)]) - e.d;
    s += r * r;
  }
  return s;
}

struct MajorizationResult {
  std::vector<Point> coords;
  std::vector<double> stress;  // stress[0] is the input stress, then one entry per sweep
  int sweeps{0};
  bool stopped_on_increase{false};
};

/// Iterative majorization over the measured patch edges:
///   p_i <- (1/deg_i) * sum_j [ p_j + d_ij * (p_i - p_j) * inv(|p_i - p_j|) ]
/// with inv(0) = 0. Nodes are swept in index order and each update uses the
/// freshest coordinates, so every update minimizes the majorizer in p_i and
/// the stress cannot increase. A sweep that does increase it (rounding) is
/// rolled back and iteration stops.
inline MajorizationResult refine_majorization(std::vector<Point> coords, const Patch& patch, int max_iters = 200,
                                              double tol = 1e-9) {
  const int m = static_cast<int>(patch.members.size());
  if (static_cast<int>(coords.size()) != m)
    throw Error(ErrorCode::LengthMismatch, "coords must match patch members");
  if (max_iters < 1 || !(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "max_iters >= 1 and tol > 0 required");

  std::vector<std::vector<std::pair<int, double>>> nbrs(static_cast<std::size_t>(m));
  for (const auto& e : patch.local_edges) {
    const int a = patch.local_index(e.i);
    const int b = patch.local_index(e.j);
    nbrs[a].push_back({b, e.d});
    nbrs[b].push_back({a, e.d});
  }

  MajorizationResult out;
  double current = raw_stress(coords, patch);
  out.stress.push_back(current);
  // Relative floor below which the stress is rounding noise.
  double scale = 0.0;
  for (const auto& e : patch.local_edges) scale += e.d * e.d;
  const double floor = 1e-28 * std::max(scale, 1e-300);

  for (int sweep = 0; sweep < max_iters; ++sweep) {
    std::vector<Point> next = coords;
    for (int i = 0; i < m; ++i) {
      if (nbrs[i].empty()) continue;
      Point acc;
      for (const auto& [j, dij] : nbrs[i]) {
        const Point diff = next[i] - next[j];
        const double len = norm(diff);
        const double inv = len < kCoincidenceKm ? 0.0 : 1.0 / len;
        acc = acc + next[j] + (dij * inv) * diff;
      }
      next[i] = (1.0 / static_cast<double>(nbrs[i].size())) * acc;
    }
    const double s = raw_stress(next, patch);
    ++out.sweeps;
    if (s > current * (1.0 + 1e-12) + floor) {
      out.stopped_on_increase = true;
      break;
    }
    const double previous = current;
    coords = std::move(next);
    current = s;
    out.stress.push_back(current);
    if (current <= floor) break;
    if ((previous - current) <= tol * previous) break;
  }
  out.coords = std::move(coords);
  return out;
}

/// Damped Gauss-Newton (Levenberg-Marquardt) on the edge residuals
/// |p_i - p_j| - d_ij. Converges quadratically near a solution, where
/// majorization slows to a crawl. Stress never increases.
inline std::vector<Point> refine_levenberg_marquardt(std::vector<Point> coords, const Patch& patch, int max_iters = 100) {
  const int m = static_cast<int>(patch.members.size());
  if (static_cast<int>(coords.size()) != m)
    throw Error(ErrorCode::LengthMismatch, "coords must match patch members");
  const auto ne = static_cast<Eigen::Index>(patch.local_edges.size());
  if (ne == 0 || m < 2) return coords;
  std::vector<std::pair<int, int>> ends;
  for (const auto& e : patch.local_edges) ends.emplace_back(patch.local_index(e.i), patch.local_index(e.j));

  double scale = 0.0;
  for (const auto& e : patch.local_edges) scale += e.d * e.d;
  const double floor = 1e-30 * scale;
  double current = raw_stress(coords, patch);
  double lambda = 1e-3;
  const Eigen::Index nx = 2 * m;
  for (int it = 0; it < max_iters && current > floor; ++it) {
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(ne, nx);
    Eigen::VectorXd res(ne);
    for (Eigen::Index k = 0; k < ne; ++k) {
      const auto [a, b] = ends[k];
      const Point diff = coords[a] - coords[b];
      const double len = norm(diff);
      res(k) = len - patch.local_edges[k].d;
      if (len < kCoincidenceKm) continue;
      jac(k, 2 * a) = diff.x / len;
      jac(k, 2 * a + 1) = diff.y / len;
      jac(k, 2 * b) = -diff.x / len;
      jac(k, 2 * b + 1) = -diff.y / len;
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd grad = jac.transpose() * res;
    bool improved = false;
    while (lambda < 1e12) {
      Eigen::MatrixXd damped = jtj;
      damped.diagonal().array() += lambda * (1.0 + jtj.diagonal().array());
      const Eigen::VectorXd step = damped.ldlt().solve(-grad);
      std::vector<Point> trial = coords;
      for (int i = 0; i < m; ++i) trial[i] = trial[i] + Point{step(2 * i), step(2 * i + 1)};
      const double s = raw_stress(trial, patch);
      if (s < current) {
        const double previous = current;
        coords = std::move(trial);
        current = s;
        lambda = std::max(lambda / 10.0, 1e-12);
        improved = previous - current > 1e-15 * previous;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) break;
  }
  return coords;
}

/// Sequential trilateration: seed a well-spread measured triangle, then place
/// the unplaced node with the most placed neighbours (at least three) by
/// linearized multilateration. Exact on noiseless data. Empty when some node
/// never gains three placed neighbours.
inline std::optional<std::vector<Point>> trilaterate(const Patch& patch) {
  const int m = static_cast<int>(patch.members.size());
  if (m < 3) return std::nullopt;
  Eigen::MatrixXd d = Eigen::MatrixXd::Constant(m, m, -1.0);
  for (const auto& e : patch.local_edges) {
    const int a = patch.local_index(e.i), b = patch.local_index(e.j);
    d(a, b) = d(b, a) = e.d;
  }
  // Seed triangle with the largest area.
  int best_a = -1, best_b = -1, best_c = -1;
  double best_area = 0.0;
  for (int a = 0; a < m; ++a)
    for (int b = a + 1; b < m; ++b) {
      if (d(a, b) < 0.0) continue;
      for (int c = b + 1; c < m; ++c) {
        if (d(a, c) < 0.0 || d(b, c) < 0.0) continue;
        const double s = 0.5 * (d(a, b) + d(a, c) + d(b, c));
        const double area2 = s * (s - d(a, b)) * (s - d(a, c)) * (s - d(b, c));
        if (area2 > best_area) {
          best_area = area2;
          best_a = a, best_b = b, best_c = c;
        }
      }
    }
  if (best_a < 0) return std::nullopt;

  std::vector<Point> p(static_cast<std::size_t>(m));
  std::vector<char> placed(static_cast<std::size_t>(m), 0);
  const double dab = d(best_a, best_b), dac = d(best_a, best_c), dbc = d(best_b, best_c);
  p[best_a] = {0.0, 0.0};
  p[best_b] = {dab, 0.0};
  const double x = (dab * dab + dac * dac - dbc * dbc) / (2.0 * dab);
  p[best_c] = {x, std::sqrt(std::max(dac * dac - x * x, 0.0))};
  placed[best_a] = placed[best_b] = placed[best_c] = 1;

  for (int count = 3; count < m; ++count) {
    int next = -1, next_deg = 0;
    for (int v = 0; v < m; ++v) {
      if (placed[v]) continue;
      int deg = 0;
      for (int u = 0; u < m; ++u) deg += placed[u] && d(u, v) >= 0.0 ? 1 : 0;
      if (deg > next_deg) next = v, next_deg = deg;
    }
    if (next < 0 || next_deg < 3) return std::nullopt;
    std::vector<int> anchors;
    for (int u = 0; u < m; ++u)
      if (placed[u] && d(u, next) >= 0.0) anchors.push_back(u);
    // |p - q_k|^2 = d_k^2 minus the first equation gives rows linear in p.
    const int r0 = anchors[0];
    Eigen::MatrixXd a(static_cast<Eigen::Index>(anchors.size() - 1), 2);
    Eigen::VectorXd rhs(a.rows());
    for (std::size_t k = 1; k < anchors.size(); ++k) {
      const Point q = p[anchors[k]], q0 = p[r0];
      const auto row = static_cast<Eigen::Index>(k - 1);
      a(row, 0) = 2.0 * (q.x - q0.x);
      a(row, 1) = 2.0 * (q.y - q0.y);
      rhs(row) = d(r0, next) * d(r0, next) - d(anchors[k], next) * d(anchors[k], next) + q.x * q.x - q0.x * q0.x +
                 q.y * q.y - q0.y * q0.y;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto sv = svd.singularValues();
    if (sv.size() < 2 || sv(1) <= 1e-9 * std::max(sv(0), 1e-300)) return std::nullopt;  // collinear anchors
    const Eigen::VectorXd sol = svd.solve(rhs);
    p[next] = {sol(0), sol(1)};
    placed[next] = 1;
  }
  return p;
}

struct EmbedOptions {
  LowerBoundRule lower_bound{LowerBoundRule::MaxIncident};
  int max_iters{200};
  double tol{1e-9};
  /// Follow majorization with Levenberg-Marquardt and also start from a
  /// trilateration; the lowest-stress candidate wins.
  bool polish{true};
};

/// Completion, classical scaling and majorization for one patch; returns the
/// final stress.
inline double embed_patch(Patch& patch, const EmbedOptions& opts = {}) {
  const auto cd = complete_distances(patch, opts.lower_bound);
  const auto mds = classical_mds(cd);
  auto refined = refine_majorization(mds.coords, patch, opts.max_iters, opts.tol);
  if (!opts.polish) {
    patch.local_coords = std::move(refined.coords);
    return refined.stress.back();
  }
  std::vector<Point> best = refine_levenberg_marquardt(std::move(refined.coords), patch);
  double best_stress = raw_stress(best, patch);
  if (auto seed = trilaterate(patch)) {
    auto alt = refine_levenberg_marquardt(refine_majorization(*seed, patch, opts.max_iters, opts.tol).coords, patch);
    const double s = raw_stress(alt, patch);
    if (s < best_stress) {
      best = std::move(alt);
      best_stress = s;
    }
  }
  patch.local_coords = std::move(best);
  return best_stress;
}

}  // namespace maxnt

#endif  // MAXNT_EMBED_HPP
