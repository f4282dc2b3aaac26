#ifndef MAXNT_SYNC_HPP
#define MAXNT_SYNC_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "maxnt/embed.hpp"
#include "maxnt/error.hpp"
#include "maxnt/geometry.hpp"
#include "maxnt/metrics.hpp"
#include "maxnt/rigidity.hpp"
#include "maxnt/scenario.hpp"

namespace maxnt {

using Complex = std::complex<double>;

/// Relative pose of patch l inside the frame of patch k:
///   p^(k) ~ r * M(p^(l)) + tau,  r = exp(i*theta),  M = identity (z=+1) or conjugation (z=-1).
struct PairAlignment {
  int k{0};
  int l{0};
  std::vector<int> shared;
  int z{0};
  double theta{0.0};
  Complex tau{0.0, 0.0};
  double residual{0.0};
};

namespace detail {

struct ComplexFit {
  Complex rotation;
  Complex translation;
  double residual;
};

// Minimizes sum |b - (r a + tau)|^2 over |r| = 1 and complex tau. The
// unconstrained complex least-squares solution has the optimal phase, so the
// unit rotation is its normalization; tau is then the centroid offset.
inline ComplexFit fit_rotation(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  const double s = static_cast<double>(a.size());
  Complex ma(0.0, 0.0), mb(0.0, 0.0);
  for (std::size_t k = 0; k < a.size(); ++k) {
    ma += a[k];
    mb += b[k];
  }
  ma /= s;
  mb /= s;
  Complex cross(0.0, 0.0);
  double spread = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    cross += std::conj(a[k] - ma) * (b[k] - mb);
    spread += std::norm(a[k] - ma);
  }
  if (spread <= s * kCoincidenceKm * kCoincidenceKm)
    throw Error(ErrorCode::DegenerateOverlap, "shared points coincide");
  const Complex r_ls = cross / spread;
  const Complex r = std::abs(r_ls) > 0.0 ? r_ls / std::abs(r_ls) : Complex(1.0, 0.0);
  const Complex tau = mb - r * ma;
  double residual = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) residual += std::norm(b[k] - (r * a[k] + tau));
  return {r, tau, residual};
}

}  // namespace detail

/// Estimates reflection, rotation and translation aligning patch l onto patch
/// k from their shared members. Fewer than three shared nodes gives z = 0.
inline PairAlignment align_pair(const Patch& pk, const Patch& pl) {
  if (!pk.local_coords || !pl.local_coords)
    throw Error(ErrorCode::InvalidArgument, "align_pair needs embedded patches");
  PairAlignment out;
  out.k = pk.patch_id;
  out.l = pl.patch_id;
  out.shared = shared_members(pk, pl);
  if (static_cast<int>(out.shared.size()) < kMinSharedForAlignment) return out;

  std::vector<Complex> a, a_mirror, b;
  for (int node : out.shared) {
    const Complex pa = to_complex((*pl.local_coords)[pl.local_index(node)]);
    a.push_back(pa);
    a_mirror.push_back(std::conj(pa));
    b.push_back(to_complex((*pk.local_coords)[pk.local_index(node)]));
  }
  const auto direct = detail::fit_rotation(a, b);
  const auto mirrored = detail::fit_rotation(a_mirror, b);
  const auto& best = direct.residual <= mirrored.residual ? direct : mirrored;
  out.z = direct.residual <= mirrored.residual ? 1 : -1;
  out.theta = wrap_angle(std::arg(best.rotation));
  out.tau = best.translation;
  out.residual = best.residual;
  return out;
}

/// Synchronization data for N patches. Z and R are stored dense; N is small.
struct SyncState {
  int patch_count{0};
  Eigen::MatrixXd Z;   // entries in {-1, 0, 1}
  Eigen::MatrixXcd R;  // Hermitian, filled once reflections are known
  Eigen::VectorXd Delta;
  std::vector<PairAlignment> alignments;
  std::vector<int> component;  // connected component of the alignment graph
  int component_count{0};
  std::vector<int> reflections;  // +1 / -1 per patch
  std::vector<double> rotations;  // [0, 2*pi) per patch
  std::vector<char> flagged;      // vanishing eigenvector component
};

/// Builds Z, the degree matrix and the alignment-graph components from the
/// pairwise alignments (entries with z = 0 are ignored).
inline SyncState build_sync_state(int patch_count, std::vector<PairAlignment> alignments) {
  SyncState st;
  st.patch_count = patch_count;
  st.Z = Eigen::MatrixXd::Zero(patch_count, patch_count);
  st.R = Eigen::MatrixXcd::Zero(patch_count, patch_count);
  st.Delta = Eigen::VectorXd::Zero(patch_count);
  st.alignments = std::move(alignments);
  for (const auto& a : st.alignments) {
    if (a.z == 0) continue;
    st.Z(a.k, a.l) = st.Z(a.l, a.k) = a.z;
  }
  for (int k = 0; k < patch_count; ++k)
    for (int l = 0; l < patch_count; ++l)
      if (st.Z(k, l) != 0.0) st.Delta(k) += 1.0;

  st.component.assign(static_cast<std::size_t>(patch_count), -1);
  for (int s = 0; s < patch_count; ++s) {
    if (st.component[s] >= 0) continue;
    std::vector<int> stack{s};
    st.component[s] = st.component_count;
    while (!stack.empty()) {
      const int x = stack.back();
      stack.pop_back();
      for (int y = 0; y < patch_count; ++y) {
        if (st.Z(x, y) == 0.0 || st.component[y] >= 0) continue;
        st.component[y] = st.component_count;
        stack.push_back(y);
      }
    }
    ++st.component_count;
  }
  st.reflections.assign(static_cast<std::size_t>(patch_count), 1);
  st.rotations.assign(static_cast<std::size_t>(patch_count), 0.0);
  st.flagged.assign(static_cast<std::size_t>(patch_count), 0);
  return st;
}

namespace detail {

inline std::vector<std::vector<int>> component_members(const SyncState& st) {
  std::vector<std::vector<int>> groups(static_cast<std::size_t>(st.component_count));
  for (int k = 0; k < st.patch_count; ++k) groups[st.component[k]].push_back(k);
  return groups;
}

// Leading eigenvector of D^{-1} M restricted to `idx`, via the similar
// Hermitian matrix D^{-1/2} M D^{-1/2}.
template <typename Matrix>
Eigen::Matrix<typename Matrix::Scalar, Eigen::Dynamic, 1> top_eigenvector(const Matrix& full,
                                                                          const std::vector<int>& idx) {
  using Scalar = typename Matrix::Scalar;
  const auto n = static_cast<Eigen::Index>(idx.size());
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> sub(n, n);
  Eigen::VectorXd deg = Eigen::VectorXd::Zero(n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) {
      sub(a, b) = full(idx[a], idx[b]);
      if (std::abs(sub(a, b)) > 0.0) deg(a) += 1.0;
    }
  Eigen::VectorXd inv_sqrt(n);
  for (Eigen::Index a = 0; a < n; ++a) inv_sqrt(a) = deg(a) > 0.0 ? 1.0 / std::sqrt(deg(a)) : 1.0;
  const auto sym = (inv_sqrt.asDiagonal() * sub * inv_sqrt.asDiagonal()).eval();
  Eigen::SelfAdjointEigenSolver<decltype(sym)> solver(sym);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v = solver.eigenvectors().col(n - 1);
  for (Eigen::Index a = 0; a < n; ++a) v(a) *= inv_sqrt(a);
  const double peak = v.cwiseAbs().maxCoeff();
  if (peak > 0.0) v /= peak;
  return v;
}

}  // namespace detail

inline constexpr double kEigenTieTolerance = 1e-12;

/// Global reflections: sign of the top eigenvector of Delta^{-1} Z, one
/// eigenproblem per connected component. Patches whose component vanishes
/// get +1 and are flagged.
inline std::vector<int> sync_reflections(SyncState& st) {
  for (const auto& idx : detail::component_members(st)) {
    if (idx.size() == 1) {
      st.reflections[idx[0]] = 1;
      continue;
    }
    const Eigen::VectorXd v = detail::top_eigenvector(st.Z, idx);
    // Fix the global sign so the first patch of every component keeps its
    // orientation when possible.
    const double gauge = std::abs(v(0)) >= kEigenTieTolerance ? (v(0) > 0.0 ? 1.0 : -1.0) : 1.0;
    for (std::size_t a = 0; a < idx.size(); ++a) {
      const double c = gauge * v(static_cast<Eigen::Index>(a));
      if (std::abs(c) < kEigenTieTolerance) {
        st.reflections[idx[a]] = 1;
        st.flagged[idx[a]] = 1;
      } else {
        st.reflections[idx[a]] = c > 0.0 ? 1 : -1;
      }
    }
  }
  return st.reflections;
}

/// Fills R from the alignments using the synchronized reflections: for a
/// mirrored patch k the measured relative angle is negated. Pairs whose
/// relative reflection disagrees with the synchronized signs are left out.
inline void apply_reflections(SyncState& st) {
  st.R = Eigen::MatrixXcd::Zero(st.patch_count, st.patch_count);
  for (const auto& a : st.alignments) {
    if (a.z == 0) continue;
    if (a.z != st.reflections[a.k] * st.reflections[a.l]) continue;
    const double angle = st.reflections[a.k] * a.theta;
    st.R(a.k, a.l) = std::polar(1.0, angle);
    st.R(a.l, a.k) = std::conj(st.R(a.k, a.l));
  }
}

/// Global rotations: argument of the top eigenvector of Delta^{-1} R per
/// component, so that theta_k - theta_l matches the relative angle of (k, l).
inline std::vector<double> sync_rotations(SyncState& st) {
  for (const auto& idx : detail::component_members(st)) {
    if (idx.size() == 1) {
      st.rotations[idx[0]] = 0.0;
      continue;
    }
    const Eigen::VectorXcd v = detail::top_eigenvector(st.R, idx);
    const Complex gauge = std::abs(v(0)) >= kEigenTieTolerance ? std::conj(v(0)) / std::abs(v(0)) : Complex(1.0, 0.0);
    for (std::size_t a = 0; a < idx.size(); ++a) {
      const Complex c = gauge * v(static_cast<Eigen::Index>(a));
      if (std::abs(c) < kEigenTieTolerance) {
        st.flagged[idx[a]] = 1;
        st.rotations[idx[a]] = 0.0;
      } else {
        st.rotations[idx[a]] = wrap_angle(std::arg(c));
      }
    }
  }
  return st.rotations;
}

/// Patch coordinates after the synchronized reflection (mirror across the x
/// axis) and rotation by -theta; translations are not applied.
inline std::vector<Point> oriented_coords(const Patch& p, int reflection, double rotation) {
  std::vector<Point> out;
  out.reserve(p.members.size());
  const Complex turn = std::polar(1.0, -rotation);
  for (const auto& q : *p.local_coords) {
    Complex c = to_complex(q);
    if (reflection < 0) c = std::conj(c);
    out.push_back(to_point(turn * c));
  }
  return out;
}

struct TranslationSystem {
  std::vector<int> nodes;  // unknowns, global indices
  Eigen::MatrixXd tau_matrix;
  Eigen::VectorXd gamma_x;
  Eigen::VectorXd gamma_y;
  std::vector<Point> solution;  // aligned with nodes
};

/// Least-squares global coordinates from oriented patches. Each global edge
/// contributes one row: its multiplicity c across patches times (x_i - x_j)
/// equals the sum of the patch-local offsets. The minimum-norm solution fixes
/// the translation gauge at zero centroid.
inline TranslationSystem solve_translations(const std::vector<const Patch*>& patches,
                                            const std::vector<std::vector<Point>>& oriented) {
  struct Row {
    double count{0.0};
    double dx{0.0};
    double dy{0.0};
  };
  std::map<std::pair<int, int>, Row> rows;
  std::vector<int> nodes;
  for (std::size_t k = 0; k < patches.size(); ++k) {
    const Patch& p = *patches[k];
    for (int v : p.members) nodes.push_back(v);
    for (const auto& e : p.local_edges) {
      const Point& pi = oriented[k][p.local_index(e.i)];
      const Point& pj = oriented[k][p.local_index(e.j)];
      auto& row = rows[{e.i, e.j}];
      row.count += 1.0;
      row.dx += pi.x - pj.x;
      row.dy += pi.y - pj.y;
    }
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());

  TranslationSystem sys;
  sys.nodes = nodes;
  const auto n = static_cast<Eigen::Index>(nodes.size());
  const auto m = static_cast<Eigen::Index>(rows.size());
  auto column = [&](int node) {
    return static_cast<Eigen::Index>(std::lower_bound(nodes.begin(), nodes.end(), node) - nodes.begin());
  };
  sys.tau_matrix = Eigen::MatrixXd::Zero(m, n);
  sys.gamma_x.resize(m);
  sys.gamma_y.resize(m);
  Eigen::Index r = 0;
  for (const auto& [edge, row] : rows) {
    sys.tau_matrix(r, column(edge.first)) = row.count;
    sys.tau_matrix(r, column(edge.second)) = -row.count;
    sys.gamma_x(r) = row.dx;
    sys.gamma_y(r) = row.dy;
    ++r;
  }
  sys.solution.assign(static_cast<std::size_t>(n), Point{});
  if (n == 0) return sys;
  if (m == 0) return sys;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(sys.tau_matrix);
  const Eigen::VectorXd x = cod.solve(sys.gamma_x);
  const Eigen::VectorXd y = cod.solve(sys.gamma_y);
  for (Eigen::Index c = 0; c < n; ++c) sys.solution[c] = {x(c), y(c)};
  return sys;
}

struct LocalizeOptions {
  EmbedOptions embed{LowerBoundRule::MaxIncident, 2000, 1e-14};
};

struct LocalizationResult {
  int node_count{0};
  std::vector<std::optional<Point>> coords;
  std::vector<int> component;  // alignment component per node, -1 if unlocalized
  int primary_component{-1};   // component covering the most nodes
  PatchSet patches;
  std::vector<char> embedded;  // per patch
  std::vector<double> patch_stress;
  SyncState sync;
  // Filled by evaluate_localization when ground truth is known.
  std::vector<double> node_error;
  double rms_km{std::numeric_limits<double>::quiet_NaN()};

  int localized_count() const {
    int c = 0;
    for (const auto& p : coords) c += p.has_value() ? 1 : 0;
    return c;
  }
};

/// Full pipeline: decomposition, per-patch embedding, pairwise alignment,
/// reflection and rotation synchronization, translation least squares. Each
/// alignment component has its own gauge; a node takes its coordinates from
/// the largest component it belongs to.
inline LocalizationResult localize(const MeasurementGraph& mg, const LocalizeOptions& opts = {}) {
  LocalizationResult res;
  res.node_count = mg.node_count;
  res.patches = decompose(mg);
  auto& patches = res.patches.patches;
  const int N = static_cast<int>(patches.size());

  res.embedded.assign(static_cast<std::size_t>(N), 0);
  res.patch_stress.assign(static_cast<std::size_t>(N), std::numeric_limits<double>::quiet_NaN());
  for (auto& p : patches) {
    try {
      res.patch_stress[p.patch_id] = embed_patch(p, opts.embed);
      res.embedded[p.patch_id] = 1;
    } catch (const Error&) {
      p.local_coords.reset();
    }
  }

  std::vector<PairAlignment> alignments;
  for (const auto& [k, l] : res.patches.adjacency) {
    if (!res.embedded[k] || !res.embedded[l]) continue;
    try {
      alignments.push_back(align_pair(patches[k], patches[l]));
    } catch (const Error&) {
    }
  }
  res.sync = build_sync_state(N, std::move(alignments));
  sync_reflections(res.sync);
  apply_reflections(res.sync);
  sync_rotations(res.sync);

  // Solve translations per component, skipping failed embeddings.
  std::vector<std::vector<int>> groups(static_cast<std::size_t>(res.sync.component_count));
  for (int k = 0; k < N; ++k)
    if (res.embedded[k]) groups[res.sync.component[k]].push_back(k);

  std::vector<std::vector<std::optional<Point>>> per_component(groups.size());
  std::vector<int> component_size(groups.size(), 0);
  for (std::size_t c = 0; c < groups.size(); ++c) {
    if (groups[c].empty()) continue;
    std::vector<const Patch*> members;
    std::vector<std::vector<Point>> oriented;
    for (int k : groups[c]) {
      members.push_back(&patches[k]);
      oriented.push_back(oriented_coords(patches[k], res.sync.reflections[k], res.sync.rotations[k]));
    }
    const auto sys = solve_translations(members, oriented);
    per_component[c].assign(static_cast<std::size_t>(mg.node_count), std::nullopt);
    for (std::size_t a = 0; a < sys.nodes.size(); ++a) per_component[c][sys.nodes[a]] = sys.solution[a];
    component_size[c] = static_cast<int>(sys.nodes.size());
  }

  res.coords.assign(static_cast<std::size_t>(mg.node_count), std::nullopt);
  res.component.assign(static_cast<std::size_t>(mg.node_count), -1);
  for (int v = 0; v < mg.node_count; ++v) {
    int best = -1;
    for (int k : res.patches.node_to_patches[v]) {
      if (!res.embedded[k]) continue;
      const int c = res.sync.component[k];
      if (best < 0 || component_size[c] > component_size[best] ||
          (component_size[c] == component_size[best] && c < best))
        best = c;
    }
    if (best < 0) continue;
    res.component[v] = best;
    res.coords[v] = per_component[best][v];
  }
  for (std::size_t c = 0; c < component_size.size(); ++c)
    if (res.primary_component < 0 || component_size[c] > component_size[res.primary_component])
      res.primary_component = static_cast<int>(c);
  return res;
}

/// Per-node error against ground truth after removing each component's
/// rigid-motion gauge; rms_km covers every localized node.
inline void evaluate_localization(LocalizationResult& res, const std::vector<Point>& truth) {
  if (static_cast<int>(truth.size()) != res.node_count)
    throw Error(ErrorCode::LengthMismatch, "truth must cover every node");
  res.node_error.assign(truth.size(), std::numeric_limits<double>::quiet_NaN());
  std::map<int, std::vector<int>> by_component;
  for (int v = 0; v < res.node_count; ++v)
    if (res.coords[v]) by_component[res.component[v]].push_back(v);
  double sum = 0.0;
  int count = 0;
  for (const auto& [c, nodes] : by_component) {
    std::vector<Point> est, ref;
    for (int v : nodes) {
      est.push_back(*res.coords[v]);
      ref.push_back(truth[v]);
    }
    const auto err = aligned_errors(est, ref);
    for (std::size_t a = 0; a < nodes.size(); ++a) {
      res.node_error[nodes[a]] = err[a];
      sum += err[a] * err[a];
      ++count;
    }
  }
  res.rms_km = count > 0 ? std::sqrt(sum / count) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace maxnt

#endif  // MAXNT_SYNC_HPP
