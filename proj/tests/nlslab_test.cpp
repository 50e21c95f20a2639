#include "potensor/nlslab.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace potensor;
using namespace potensor::nlslab;

namespace {

Eigen::Vector3d hyperboloid_image(double s, double t) {
  return {s * s, s * s * s * t, s * s * s * s * t * t};
}

Eigen::Vector4d lu_image(double x, double y, double z, double w) {
  return {x, z / x, y, w - y * z / x};
}

TEST(Hyperboloid, RecoversPlantedGenericPoint) {
  Rng rng(1);
  const auto pts = hyperboloid_criticals(hyperboloid_image(1.0, 2.0), 200, rng);
  ASSERT_FALSE(pts.empty());
  bool hit = false;
  for (const auto& p : pts) {
    EXPECT_LE(p.grad_norm, 1e-9);
    EXPECT_GT(std::abs(p.s), 1e-8);
    if (std::hypot(p.s - 1.0, p.t - 2.0) < 1e-8) hit = true;
  }
  EXPECT_TRUE(hit);
}

TEST(Hyperboloid, FindsDiagonalPointForNonGenericTarget) {
  // b on the image of the diagonal s = t: the global minimizer sits exactly
  // on the degenerate locus, so datum must reach (near) zero there.
  Rng rng(2);
  const auto pts =
      hyperboloid_criticals(hyperboloid_image(1.5, 1.5), 200, rng);
  ASSERT_FALSE(pts.empty());
  double min_datum = std::numeric_limits<double>::infinity();
  for (const auto& p : pts) min_datum = std::min(min_datum, p.datum);
  EXPECT_LE(min_datum, 1e-6);
}

TEST(Hyperboloid, GenericTargetsStayOffDiagonal) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::Vector3d b;
    for (int c = 0; c < 3; ++c) b[c] = rng.next_gaussian();
    for (const auto& p : hyperboloid_criticals(b, 60, rng))
      EXPECT_GT(p.datum, 1e-6) << "b = " << b.transpose();
  }
}

TEST(Hyperboloid, SeededStartConvergesNearby) {
  Rng rng(4);
  const Eigen::Vector3d b = hyperboloid_image(0.8, -1.1);
  const auto pts = hyperboloid_criticals(
      b, 0, rng, {Eigen::Vector2d(0.75, -1.05)});
  ASSERT_FALSE(pts.empty());
  EXPECT_LT(std::hypot(pts[0].s - 0.8, pts[0].t + 1.1), 1e-6);
}

TEST(Hyperboloid, DedupRemovesRepeatedBasins) {
  Rng a(5), b(5);
  const Eigen::Vector3d target = hyperboloid_image(1.0, 2.0);
  const auto few = hyperboloid_criticals(target, 100, a);
  const auto many = hyperboloid_criticals(target, 400, b);
  // More starts must not inflate the deduplicated point count by revisiting
  // the same basins; allow at most genuinely new basins.
  for (const auto& p : few) {
    bool present = false;
    for (const auto& q : many)
      if (std::hypot(p.s - q.s, p.t - q.t) < 1e-5) present = true;
    EXPECT_TRUE(present);
  }
  for (std::size_t i = 0; i + 1 < many.size(); ++i)
    for (std::size_t j = i + 1; j < many.size(); ++j)
      EXPECT_GE(std::hypot(many[i].s - many[j].s, many[i].t - many[j].t),
                1e-6);
}

TEST(Lu, RecoversPlantedGenericMatrix) {
  // X = [[2,1],[1,1]] has LU data (2, 0.5, 1, 0.5) and det = 1.
  Rng rng(6);
  const Eigen::Vector4d b = lu_image(2.0, 1.0, 1.0, 1.0);
  EXPECT_NEAR((b - Eigen::Vector4d(2.0, 0.5, 1.0, 0.5)).norm(), 0.0, 1e-15);
  const auto pts = lu_criticals(b, 400, rng);
  ASSERT_FALSE(pts.empty());
  bool hit = false;
  for (const auto& p : pts) {
    EXPECT_LE(p.grad_norm, 1e-9);
    EXPECT_GT(std::abs(p.x), 1e-8);
    if (Eigen::Vector4d(p.x - 2.0, p.y - 1.0, p.z - 1.0, p.w - 1.0).norm() <
        1e-7)
      hit = true;
  }
  EXPECT_TRUE(hit);
}

TEST(Lu, SingularTargetReachesZeroDeterminant) {
  // X = [[1,1],[1,1]] is singular; its LU data is (1, 1, 1, 0) and the
  // global minimizer lies on the det = 0 locus.
  Rng rng(7);
  const auto pts = lu_criticals(lu_image(1.0, 1.0, 1.0, 1.0), 400, rng);
  ASSERT_FALSE(pts.empty());
  double min_datum = std::numeric_limits<double>::infinity();
  for (const auto& p : pts) min_datum = std::min(min_datum, p.datum);
  EXPECT_LE(min_datum, 1e-8);
}

TEST(Lu, SeededStartRecoversPlanted) {
  Rng rng(8);
  const Eigen::Vector4d truth(1.3, -0.7, 0.5, 2.1);
  const Eigen::Vector4d b = lu_image(truth[0], truth[1], truth[2], truth[3]);
  std::vector<Eigen::Vector4d> seeds = {
      truth + Eigen::Vector4d(0.05, -0.05, 0.05, -0.05)};
  const auto pts = lu_criticals(b, 0, rng, seeds);
  ASSERT_FALSE(pts.empty());
  EXPECT_LT((Eigen::Vector4d(pts[0].x, pts[0].y, pts[0].z, pts[0].w) - truth)
                .norm(),
            1e-6);
}

TEST(Lu, GenericTargetsStayOffSingularLocus) {
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::Vector4d b;
    for (int c = 0; c < 4; ++c) b[c] = rng.next_gaussian();
    for (const auto& p : lu_criticals(b, 60, rng))
      EXPECT_GT(p.datum, 1e-6) << "b = " << b.transpose();
  }
}

TEST(LocationExperiment, SmallRunsAreClean) {
  Rng rng1(10);
  const auto hyp =
      location_experiment(LocationKind::Hyperboloid, 10, 50, rng1);
  EXPECT_EQ(hyp.num_targets, 10);
  EXPECT_EQ(hyp.violations, 0);
  EXPECT_EQ(static_cast<int>(hyp.minima.size()), 10);

  Rng rng2(11);
  const auto lu = location_experiment(LocationKind::Lu, 10, 50, rng2);
  EXPECT_EQ(lu.violations, 0);
}

TEST(LocationExperiment, DeterministicPerSeed) {
  Rng a(12), b(12);
  const auto r1 = location_experiment(LocationKind::Hyperboloid, 5, 30, a);
  const auto r2 = location_experiment(LocationKind::Hyperboloid, 5, 30, b);
  ASSERT_EQ(r1.minima.size(), r2.minima.size());
  for (std::size_t i = 0; i < r1.minima.size(); ++i) {
    if (std::isnan(r1.minima[i]))
      EXPECT_TRUE(std::isnan(r2.minima[i]));
    else
      EXPECT_EQ(r1.minima[i], r2.minima[i]);
  }
}

}  // namespace
