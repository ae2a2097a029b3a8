#include <sqgrasp/fit.hpp>
#include <sqgrasp/shapes.hpp>

#include <gtest/gtest.h>

using namespace sqg;

namespace {

Superquadric make_sq(Vec3 axes, double e1, double e2) {
  Superquadric sq;
  sq.axes = axes;
  sq.eps1 = e1;
  sq.eps2 = e2;
  return sq;
}

Superquadric random_sq(Rng& rng) {
  Superquadric sq = make_sq(Vec3(uniform(rng, 0.01, 0.1), uniform(rng, 0.01, 0.1), uniform(rng, 0.01, 0.1)),
                            uniform(rng, 0.1, 1.9), uniform(rng, 0.1, 1.9));
  sq.pose = {random_rotation(rng), Vec3(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1))};
  return sq;
}

}  // namespace

TEST(Implicit, EllipsoidClosedForm) {
  const Superquadric sq = make_sq(Vec3(1, 2, 3), 1.0, 1.0);
  Rng rng(1);
  for (int k = 0; k < 200; ++k) {
    const Vec3 p(uniform(rng, -4, 4), uniform(rng, -4, 4), uniform(rng, -4, 4));
    const double expect = p.x() * p.x() + p.y() * p.y() / 4.0 + p.z() * p.z() / 9.0;
    EXPECT_NEAR(implicit_value(sq, p), expect, 1e-12 * std::max(1.0, expect));
  }
}

TEST(Implicit, OctahedronClosedForm) {
  const Superquadric sq = make_sq(Vec3(1, 2, 3), 2.0, 2.0);
  Rng rng(2);
  for (int k = 0; k < 200; ++k) {
    const Vec3 p(uniform(rng, -4, 4), uniform(rng, -4, 4), uniform(rng, -4, 4));
    const double expect = std::abs(p.x()) + std::abs(p.y()) / 2.0 + std::abs(p.z()) / 3.0;
    EXPECT_NEAR(implicit_value(sq, p), expect, 1e-12 * std::max(1.0, expect));
  }
}

TEST(Implicit, CenterSurfaceOutside) {
  Superquadric sq = make_sq(Vec3(0.02, 0.03, 0.05), 0.4, 1.3);
  sq.pose = {rot_z(0.7) * rot_x(0.2), Vec3(0.1, -0.2, 0.3)};
  EXPECT_EQ(implicit_value(sq, sq.pose.t), 0.0);
  EXPECT_NEAR(implicit_value(sq, sq.pose.apply(Vec3(0.02, 0, 0))), 1.0, 1e-12);
  EXPECT_NEAR(implicit_value(sq, sq.pose.apply(Vec3(0, 0, -0.05))), 1.0, 1e-12);
  EXPECT_GT(implicit_value(sq, sq.pose.apply(Vec3(0.021, 0, 0))), 1.0);
}

TEST(Implicit, GradientMatchesFiniteDifference) {
  Rng rng(3);
  for (int k = 0; k < 100; ++k) {
    const Superquadric sq = random_sq(rng);
    const Vec3 p = sq.pose.apply(Vec3(uniform(rng, 0.2, 0.8) * sq.ax(), uniform(rng, 0.2, 0.8) * sq.ay(),
                                      uniform(rng, 0.2, 0.8) * sq.az()));
    const Vec3 g = implicit_gradient(sq, p);
    for (int i = 0; i < 3; ++i) {
      const double h = 1e-7;
      Vec3 dp = Vec3::Zero();
      dp[i] = h;
      const double fd = (implicit_value(sq, p + dp) - implicit_value(sq, p - dp)) / (2.0 * h);
      EXPECT_NEAR(g[i], fd, 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(Sampling, PointsOnSurfaceWithUnitOutwardNormals) {
  Rng rng(4);
  for (int k = 0; k < 20; ++k) {
    const Superquadric sq = random_sq(rng);
    const PointCloud pc = sample_surface(sq, 500, static_cast<std::uint64_t>(k));
    ASSERT_EQ(pc.size(), 500u);
    ASSERT_TRUE(pc.has_normals());
    for (std::size_t i = 0; i < pc.size(); ++i) {
      EXPECT_NEAR(implicit_value(sq, pc.points[i]), 1.0, 1e-9);
      EXPECT_NEAR(pc.normals[i].norm(), 1.0, 1e-12);
      EXPECT_GT(pc.normals[i].dot(pc.points[i] - sq.pose.t), 0.0);
    }
  }
}

TEST(Sampling, DeterministicPerSeed) {
  const Superquadric sq = make_sq(Vec3(0.02, 0.03, 0.04), 0.3, 0.7);
  const PointCloud a = sample_surface(sq, 100, 9);
  const PointCloud b = sample_surface(sq, 100, 9);
  const PointCloud c = sample_surface(sq, 100, 10);
  EXPECT_EQ(a.points, b.points);
  EXPECT_NE(a.points, c.points);
}

TEST(Sampling, SphereHeightIsUniform) {
  // Archimedes: on a sphere the height of an area-uniform point is uniform.
  const PointCloud pc = sample_surface(make_sq(Vec3::Ones(), 1.0, 1.0), 20000, 5);
  for (double t : {-0.5, 0.0, 0.5}) {
    const double frac = static_cast<double>(std::count_if(pc.points.begin(), pc.points.end(),
                                                          [&](const Vec3& p) { return p.z() < t; })) /
                        static_cast<double>(pc.size());
    EXPECT_NEAR(frac, (t + 1.0) / 2.0, 0.02);
  }
}

TEST(Sampling, RejectsZeroCount) {
  EXPECT_THROW(sample_surface(Superquadric{}, 0, 1), Error);
}

TEST(Normals, OffSurfaceRejected) {
  const Superquadric sq = make_sq(Vec3(1, 1, 1), 1.0, 1.0);
  EXPECT_NEAR(normal_at(sq, Vec3(0, 0, 1)).z(), 1.0, 1e-12);
  try {
    normal_at(sq, Vec3(0, 0, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_argument);
  }
}

TEST(Equivalence, SwapsDescribeTheSameSurfaceWhenExponentsAgree) {
  Superquadric sq = make_sq(Vec3(0.03, 0.03, 0.05), 0.3, 0.3);
  sq.pose = {rot_x(0.4), Vec3(0.1, 0.0, 0.2)};
  const auto reps = equivalent_parameterizations(sq);
  ASSERT_EQ(reps.size(), 3u);
  const PointCloud pc = sample_surface(sq, 300, 1);
  for (std::size_t r = 1; r < reps.size(); ++r) {
    for (const auto& p : pc.points) EXPECT_NEAR(implicit_value(reps[r], p), 1.0, 1e-9);
  }
}

TEST(Equivalence, RoundCrossSectionHasNoAlternates) {
  EXPECT_EQ(equivalent_parameterizations(make_sq(Vec3(0.03, 0.03, 0.05), 0.1, 1.0)).size(), 1u);
  EXPECT_EQ(equivalent_parameterizations(make_sq(Vec3(0.03, 0.045, 0.05), 0.1, 0.1)).size(), 1u);
  EXPECT_EQ(equivalent_parameterizations(make_sq(Vec3(0.03, 0.031, 0.05), 0.1, 0.1)).size(), 3u);
}

TEST(Equivalence, ThresholdsValidated) {
  EXPECT_THROW(equivalent_parameterizations(Superquadric{}, {0.0, 0.1}), Error);
  EXPECT_THROW(equivalent_parameterizations(Superquadric{}, {0.3, 1.0}), Error);
}

TEST(SupportFunction, MatchesDenseSurfaceMaximum) {
  Rng rng(6);
  for (int k = 0; k < 30; ++k) {
    Superquadric sq = random_sq(rng);
    sq.pose = RigidPose{};
    const PointCloud pc = sample_surface(sq, 40000, static_cast<std::uint64_t>(k));
    const double shape[5] = {sq.ax(), sq.ay(), sq.az(), sq.eps1, sq.eps2};
    for (int d = 0; d < 5; ++d) {
      const Vec3 u = random_unit_vector(rng);
      const double uu[3] = {u.x(), u.y(), u.z()};
      double dense = -1.0;
      for (const auto& p : pc.points) dense = std::max(dense, u.dot(p));
      const double h = detail::support_extent(shape, uu);
      EXPECT_GE(h, dense - 1e-9);
      EXPECT_LE(h, dense * 1.01);
    }
  }
}

TEST(Shapes, PrimitiveSamplesLieOnTheirSurface) {
  for (Family f : {Family::cuboid, Family::cylinder, Family::elliptical_cylinder, Family::frustum}) {
    const Shape s{f, f == Family::frustum ? Vec3(0.03, 0.025, 0.04) : Vec3(0.02, 0.03, 0.05)};
    const PointCloud pc = sample_shape(s, 400, 3);
    for (const auto& p : pc.points) EXPECT_NEAR(inside_value(s, p), 1.0, 1e-6) << to_string(f);
  }
  EXPECT_EQ(family_from_string("frustum"), Family::frustum);
  EXPECT_THROW(family_from_string("sphere"), Error);
}
