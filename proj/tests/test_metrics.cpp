#include <gtest/gtest.h>

#include <complex>
#include <random>

#include "maxnt/metrics.hpp"

using namespace maxnt;

namespace {

// Closed-form 2-D orthogonal Procrustes: with centred complex coordinates a, b
// the optimal residual is sum|a|^2 + sum|b|^2 - 2 max(|sum conj(a) b|, |sum a b|).
double closed_form_rms(const std::vector<Point>& est, const std::vector<Point>& truth) {
  const auto ce = to_complex(centroid(est));
  const auto ct = to_complex(centroid(truth));
  double aa = 0, bb = 0;
  std::complex<double> direct(0), mirror(0);
  for (std::size_t k = 0; k < est.size(); ++k) {
    const auto a = to_complex(est[k]) - ce;
    const auto b = to_complex(truth[k]) - ct;
    aa += std::norm(a);
    bb += std::norm(b);
    direct += std::conj(a) * b;
    mirror += a * b;
  }
  const double best = aa + bb - 2.0 * std::max(std::abs(direct), std::abs(mirror));
  return std::sqrt(std::max(best, 0.0) / static_cast<double>(est.size()));
}

const std::vector<Point> kTruth{{0, 0}, {1, 0}, {0.2, 0.9}};

RunReport report(double degree) {
  RunReport r;
  r.scenario_id = "s";
  r.algo = "lmst";
  r.avg_node_degree = degree;
  return r;
}

}  // namespace

TEST(Procrustes, IdenticalSetsHaveZeroError) { EXPECT_LE(procrustes_error(kTruth, kTruth), 1e-15); }

TEST(Procrustes, RigidMotionIsRemoved) {
  const auto r = std::polar(1.0, 37.0 * kPi / 180.0);
  std::vector<Point> moved;
  for (const auto& p : kTruth) moved.push_back(to_point(r * to_complex(p) + std::complex<double>(3.0, -2.0)));
  EXPECT_LE(procrustes_error(moved, kTruth), 1e-12);
  std::vector<Point> mirrored;
  for (const auto& p : moved) mirrored.push_back({-p.x, p.y});
  EXPECT_LE(procrustes_error(mirrored, kTruth), 1e-12);
}

TEST(Procrustes, OneDisplacedNodeMatchesClosedForm) {
  auto est = kTruth;
  est[2].x += 0.3;
  const double rms = procrustes_error(est, kTruth);
  EXPECT_NEAR(rms, closed_form_rms(est, kTruth), 1e-9);
  EXPECT_LE(rms, 0.3 / std::sqrt(3.0) + 1e-12);
  EXPECT_GT(rms, 0.0);
}

TEST(Procrustes, RandomSetsMatchClosedForm) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 3 + static_cast<int>(rng() % 10);
    std::vector<Point> a, b;
    for (int k = 0; k < n; ++k) {
      a.push_back({g(rng), g(rng)});
      b.push_back({g(rng), g(rng)});
    }
    EXPECT_NEAR(procrustes_error(a, b), closed_form_rms(a, b), 1e-9);
  }
}

TEST(Procrustes, GaugeInvariant) {
  auto est = kTruth;
  est[1].y -= 0.2;
  const double base = procrustes_error(est, kTruth);
  const auto r = std::polar(1.0, 1.3);
  std::vector<Point> moved;
  for (const auto& p : est) moved.push_back(to_point(r * to_complex(p) + 5.0));
  EXPECT_NEAR(procrustes_error(moved, kTruth), base, 1e-12);
}

TEST(Procrustes, LengthMismatch) {
  try {
    procrustes_error({{0, 0}}, kTruth);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LengthMismatch);
  }
}

TEST(Aggregate, SingleReport) {
  const auto rows = aggregate({report(4.0)});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].avg_node_degree.mean, 4.0);
  EXPECT_EQ(rows[0].avg_node_degree.stddev, 0.0);
  EXPECT_EQ(rows[0].runs, 1);
}

TEST(Aggregate, EqualReports) {
  const auto rows = aggregate({report(2.5), report(2.5)});
  EXPECT_EQ(rows[0].avg_node_degree.stddev, 0.0);
}

TEST(Aggregate, SampleStandardDeviation) {
  const auto rows = aggregate({report(1.0), report(3.0)});
  EXPECT_DOUBLE_EQ(rows[0].avg_node_degree.mean, 2.0);
  EXPECT_DOUBLE_EQ(rows[0].avg_node_degree.stddev, std::sqrt(2.0));
}

TEST(Aggregate, GroupsByAlgorithmAndBeta) {
  auto a = report(1.0);
  auto b = report(2.0);
  b.algo = "maxnttop";
  auto c = report(3.0);
  c.beta_db = 5.0;
  auto failed = report(100.0);
  failed.status = "not_converged";
  const auto rows = aggregate({a, b, c, failed});
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& r : rows) EXPECT_EQ(r.runs, 1);
}

TEST(Aggregate, EmptyInput) {
  try {
    aggregate({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyInput);
  }
}
