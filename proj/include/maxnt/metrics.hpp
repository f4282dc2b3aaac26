#ifndef MAXNT_METRICS_HPP
#define MAXNT_METRICS_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "maxnt/error.hpp"
#include "maxnt/geometry.hpp"

namespace maxnt {

/// Rigid motion (rotation or reflection, then translation) that maps an
/// estimate onto a reference.
struct RigidMotion {
  Eigen::Matrix2d linear{Eigen::Matrix2d::Identity()};
  Eigen::Vector2d offset{Eigen::Vector2d::Zero()};

  Point apply(Point p) const {
    const Eigen::Vector2d q = linear * Eigen::Vector2d(p.x, p.y) + offset;
    return {q.x(), q.y()};
  }
};

/// Orthogonal Procrustes without scaling: the orthogonal map (det may be -1)
/// and translation minimizing the squared distance from est to truth.
inline RigidMotion procrustes_fit(const std::vector<Point>& est, const std::vector<Point>& truth) {
  if (est.size() != truth.size() || est.empty())
    throw Error(ErrorCode::LengthMismatch, "procrustes needs equal, nonempty point lists");
  const Point ce = centroid(est);
  const Point ct = centroid(truth);
  Eigen::Matrix2d cross = Eigen::Matrix2d::Zero();
  for (std::size_t k = 0; k < est.size(); ++k) {
    const Eigen::Vector2d a(est[k].x - ce.x, est[k].y - ce.y);
    const Eigen::Vector2d b(truth[k].x - ct.x, truth[k].y - ct.y);
    cross += a * b.transpose();
  }
  Eigen::JacobiSVD<Eigen::Matrix2d> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  RigidMotion m;
  m.linear = svd.matrixV() * svd.matrixU().transpose();
  m.offset = Eigen::Vector2d(ct.x, ct.y) - m.linear * Eigen::Vector2d(ce.x, ce.y);
  return m;
}

/// Per-node distances after optimal rigid alignment of est onto truth.
inline std::vector<double> aligned_errors(const std::vector<Point>& est, const std::vector<Point>& truth) {
  const auto motion = procrustes_fit(est, truth);
  std::vector<double> err(est.size());
  for (std::size_t k = 0; k < est.size(); ++k) err[k] = distance(motion.apply(est[k]), truth[k]);
  return err;
}

/// RMS position error (km) after removing the rigid-motion gauge.
inline double procrustes_error(const std::vector<Point>& est, const std::vector<Point>& truth) {
  const auto err = aligned_errors(est, truth);
  double s = 0.0;
  for (double e : err) s += e * e;
  return std::sqrt(s / static_cast<double>(err.size()));
}

/// One row of experiment output.
struct RunReport {
  std::string scenario_id;
  std::uint64_t seed{0};
  std::string algo;
  double beta_db{0.0};
  double avg_node_degree{0.0};
  double throughput_total{0.0};     // bit/s
  double throughput_per_link{0.0};  // bit/s
  double localization_rms_km{0.0};  // NaN when unavailable
  int iterations{0};
  double wall_time_ms{0.0};
  std::string status{"ok"};

  bool ok() const { return status == "ok"; }
};

struct Stat {
  double mean{0.0};
  double stddev{0.0};  // sample standard deviation; 0 for a single value
};

inline Stat summarize(const std::vector<double>& values) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "no values to summarize");
  Stat s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double acc = 0.0;
    for (double v : values) acc += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(acc / static_cast<double>(values.size() - 1));
  }
  return s;
}

struct SummaryRow {
  std::string scenario_id;
  std::string algo;
  double beta_db{0.0};
  int runs{0};
  Stat avg_node_degree;
  Stat throughput_total;
  Stat throughput_per_link;
  Stat localization_rms_km;
  Stat iterations;
};

/// Groups successful reports by (scenario, algorithm, beta) and computes mean
/// and sample standard deviation of each metric. Rows come out sorted by key.
inline std::vector<SummaryRow> aggregate(const std::vector<RunReport>& reports) {
  if (reports.empty()) throw Error(ErrorCode::EmptyInput, "no reports to aggregate");
  std::map<std::tuple<std::string, std::string, double>, std::vector<const RunReport*>> groups;
  for (const auto& r : reports)
    if (r.ok()) groups[{r.scenario_id, r.algo, r.beta_db}].push_back(&r);

  std::vector<SummaryRow> rows;
  for (const auto& [key, members] : groups) {
    auto collect = [&](auto field) {
      std::vector<double> v;
      for (const auto* r : members) v.push_back(field(*r));
      return summarize(v);
    };
    SummaryRow row;
    row.scenario_id = std::get<0>(key);
    row.algo = std::get<1>(key);
    row.beta_db = std::get<2>(key);
    row.runs = static_cast<int>(members.size());
    row.avg_node_degree = collect([](const RunReport& r) { return r.avg_node_degree; });
    row.throughput_total = collect([](const RunReport& r) { return r.throughput_total; });
    row.throughput_per_link = collect([](const RunReport& r) { return r.throughput_per_link; });
    row.localization_rms_km = collect([](const RunReport& r) { return r.localization_rms_km; });
    row.iterations = collect([](const RunReport& r) { return static_cast<double>(r.iterations); });
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace maxnt

#endif  // MAXNT_METRICS_HPP
