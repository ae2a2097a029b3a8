#include <sqgrasp/reports.hpp>
#include <sqgrasp/scene.hpp>

#include <gtest/gtest.h>

#include <set>

using namespace sqg;

namespace {

const DatabaseIndex& cylinder_db() {
  static const DatabaseIndex db = [] {
    GridSpec g;
    g.families = {Family::cylinder};
    g.bases_per_family = 2;
    g.scales = 2;
    g.scale_max = 0.02;
    g.grasps_per_object = 32;
    return generate_database(g, GripperSpec{}, 11);
  }();
  return db;
}

SceneObject ellipsoid(double r, const Vec3& at) {
  SceneObject o;
  o.record_id = "sphere";
  o.shape = {Family::ellipsoid, Vec3::Constant(r)};
  o.pose.t = at;
  o.record_pose = o.pose;
  return o;
}

// Grasp approaching straight down, fingertips at `tip`, closing along world x.
Grasp top_down(const Vec3& tip, double w) {
  Grasp g;
  g.R.col(0) = Vec3::UnitX();
  g.R.col(1) = -Vec3::UnitY();
  g.R.col(2) = -Vec3::UnitZ();
  g.p = tip;
  g.w = w;
  return g;
}

std::set<std::array<double, 3>> point_set(const std::vector<Vec3>& pts) {
  std::set<std::array<double, 3>> s;
  for (const auto& p : pts) s.insert({p.x(), p.y(), p.z()});
  return s;
}

}  // namespace

TEST(MakeScene, SingleObjectInsideWorkspaceAndOnTable) {
  const SceneSpec s = make_scene(1, cylinder_db(), 3);
  ASSERT_EQ(s.objects.size(), 1u);
  EXPECT_EQ(s.target_index, 0);
  const PointCloud pts = object_surface(s.objects[0], 3000, 9);
  double zmin = 1.0;
  for (const auto& p : pts.points) {
    EXPECT_LE(std::abs(p.x()), s.half_x + 1e-3);
    EXPECT_LE(std::abs(p.y()), s.half_y + 1e-3);
    zmin = std::min(zmin, p.z());
  }
  EXPECT_NEAR(zmin, 0.0, 1e-3);
}

TEST(MakeScene, DeterministicPerSeed) {
  const std::string a = to_json(make_scene(5, cylinder_db(), 4)).dump();
  EXPECT_EQ(a, to_json(make_scene(5, cylinder_db(), 4)).dump());
  EXPECT_NE(a, to_json(make_scene(5, cylinder_db(), 5)).dump());
}

TEST(MakeScene, ObjectsDoNotPenetrate) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const SceneSpec s = make_scene(5, cylinder_db(), seed);
    ASSERT_EQ(s.objects.size(), 5u);
    EXPECT_GE(s.target_index, 0);
    EXPECT_LT(s.target_index, 5);
    for (std::size_t i = 0; i < s.objects.size(); ++i) {
      const PointCloud pts = object_surface(s.objects[i], 600, derive_seed(seed, "placement_check", i));
      for (std::size_t j = 0; j < s.objects.size(); ++j) {
        if (i == j) continue;
        const auto& o = s.objects[j];
        for (const auto& p : pts.points) ASSERT_GE(inside_value(o.shape, o.pose.apply_inverse(p)), 1.0 - 1e-3);
      }
    }
  }
}

TEST(MakeScene, Errors) {
  EXPECT_THROW(make_scene(1, DatabaseIndex{}, 1), Error);
  EXPECT_THROW(make_scene(0, cylinder_db(), 1), Error);
  DatabaseIndex huge;
  PrimitiveRecord r;
  r.id = "huge";
  r.dims = Vec3::Constant(0.3);
  huge.records.push_back(r);
  huge.build_index();
  try {
    make_scene(1, huge, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::placement_failure);
  }
}

TEST(Render, SphereShowsAboutHalfItsSurface) {
  SceneSpec s;
  s.objects = {ellipsoid(0.03, Vec3(0.0, 0.0, 0.03))};
  RenderConfig cfg;
  cfg.table_spacing = 0.0;
  const RenderResult r = render_single_view(s, 4000, 2, cfg);
  const double frac = static_cast<double>(r.cloud.size()) / 4000.0;
  EXPECT_GE(frac, 0.4);
  EXPECT_LE(frac, 0.6);
  const Vec3 cam = s.camera.position();
  for (std::size_t i = 0; i < r.cloud.size(); ++i) {
    EXPECT_GT(r.cloud.normals[i].dot(cam - r.cloud.points[i]), 0.0);
    EXPECT_EQ(r.object_ids[i], 0);
  }
  // Every kept point is one of the object's own samples.
  const auto all = point_set(object_surface(s.objects[0], 4000, derive_seed(2, "render", 0)).points);
  for (const auto& p : r.cloud.points) EXPECT_TRUE(all.count({p.x(), p.y(), p.z()}));
}

TEST(Render, HiddenObjectHasNoPoints) {
  SceneSpec s;
  s.objects.push_back(ellipsoid(0.01, Vec3(0.0, 0.0, 0.01)));
  SceneObject wall;
  wall.shape = {Family::cuboid, Vec3(0.08, 0.08, 0.01)};
  wall.pose.t = 0.5 * (s.camera.position() + s.objects[0].pose.t);
  s.objects.push_back(wall);
  RenderConfig cfg;
  cfg.table_spacing = 0.0;
  const RenderResult r = render_single_view(s, 3000, 3, cfg);
  EXPECT_TRUE(r.indices_of(0).empty());
  EXPECT_FALSE(r.indices_of(1).empty());
  // Independent segment check on the hidden sphere's camera-facing samples.
  const PointCloud sphere = object_surface(s.objects[0], 200, 1);
  for (std::size_t i = 0; i < sphere.size(); ++i) {
    const Vec3& p = sphere.points[i];
    bool blocked = false;
    for (int k = 1; k <= 1000 && !blocked; ++k) {
      const Vec3 q = p + (k / 1000.0) * (s.camera.position() - p);
      blocked = (wall.pose.apply_inverse(q).cwiseAbs().array() < wall.shape.dims.array()).all();
    }
    EXPECT_TRUE(blocked);
  }
}

TEST(Render, EmptySceneAndTable) {
  EXPECT_EQ(render_single_view(SceneSpec{}, 100, 1).cloud.size(), 0u);
  SceneSpec s;
  s.objects = {ellipsoid(0.02, Vec3(0.1, 0.0, 0.02))};
  const RenderResult r = render_single_view(s, 500, 1);
  const auto table = r.indices_of(kTableId);
  ASSERT_FALSE(table.empty());
  for (auto i : table) {
    EXPECT_EQ(r.cloud.points[i].z(), 0.0);
    EXPECT_EQ(r.cloud.normals[i], Vec3::UnitZ());
  }
  const RenderResult again = render_single_view(s, 500, 1);
  EXPECT_EQ(r.cloud.points, again.cloud.points);
}

TEST(LabelOracle, CenteredGraspOnIsolatedSphere) {
  SceneSpec s;
  s.objects = {ellipsoid(0.02, Vec3(0.0, 0.0, 0.03))};
  const Grasp g = top_down(Vec3(0.0, 0.0, 0.025), 0.05);
  const Labels l = label_oracle(s, g, GripperSpec{});
  EXPECT_EQ(l.eval_label, 1);
  EXPECT_EQ(l.reason, LabelReason::success);
  EXPECT_EQ(l.refine_labels[1], 1);
}

TEST(LabelOracle, InvariantUnderTableMotions) {
  SceneSpec s;
  s.objects = {ellipsoid(0.02, Vec3(0.0, 0.0, 0.03)), ellipsoid(0.015, Vec3(0.07, 0.02, 0.015))};
  const std::vector<Grasp> grasps = {top_down(Vec3(0.0, 0.0, 0.025), 0.05), top_down(Vec3(0.03, 0.0, 0.025), 0.05),
                                     top_down(Vec3(0.0, 0.0, 0.005), 0.05)};
  const RigidPose T{rot_z(0.7), Vec3(0.05, -0.08, 0.0)};
  SceneSpec moved = s;
  for (auto& o : moved.objects) {
    o.pose = T * o.pose;
    o.record_pose = T * o.record_pose;
  }
  for (const auto& g : grasps) {
    const Labels a = label_oracle(s, g, GripperSpec{});
    const Labels b = label_oracle(moved, transformed(g, T), GripperSpec{});
    EXPECT_EQ(a.eval_label, b.eval_label);
    EXPECT_EQ(a.refine_labels, b.refine_labels);
    EXPECT_EQ(a.reason, b.reason);
  }
}

TEST(LabelOracle, NeighborInTheHandFails) {
  SceneSpec s;
  s.objects = {ellipsoid(0.02, Vec3(0.0, 0.0, 0.03)), ellipsoid(0.01, Vec3(0.03, 0.0, 0.04))};
  const Labels l = label_oracle(s, top_down(Vec3(0.0, 0.0, 0.025), 0.05), GripperSpec{});
  EXPECT_EQ(l.eval_label, 0);
  EXPECT_EQ(l.reason, LabelReason::collision_object);
}

TEST(LabelOracle, TableAndEdgeContacts) {
  SceneSpec s;
  s.objects = {ellipsoid(0.02, Vec3(0.0, 0.0, 0.03))};
  EXPECT_EQ(label_oracle(s, top_down(Vec3(0.0, 0.0, -0.001), 0.05), GripperSpec{}).reason,
            LabelReason::collision_table);

  // Thin slab turned 60 degrees about z: inside the closing band the extreme
  // points lie on its broad faces.
  SceneSpec e;
  SceneObject slab;
  slab.shape = {Family::cuboid, Vec3(0.003, 0.06, 0.01)};
  slab.pose = {rot_z(deg2rad(60.0)), Vec3(0.0, 0.0, 0.05)};
  e.objects = {slab};
  const Grasp g = top_down(Vec3(0.0, 0.0, 0.035), 0.05);
  const GripperSpec gripper;
  const PointCloud dense = oracle_surfaces(e, 0).objects[0];
  const auto closure = closure_region(dense, g, gripper);
  ASSERT_FALSE(closure.empty());
  double lo = 1.0, hi = -1.0;
  for (auto i : closure) {
    lo = std::min(lo, dense.points[i].x());
    hi = std::max(hi, dense.points[i].x());
  }
  for (auto i : closure) {
    const double x = dense.points[i].x();
    if (x <= lo + 5e-4 || x >= hi - 5e-4) {
      EXPECT_NEAR(contact_angle_deg(g, dense.normals[i]), 60.0, 1.0);
    }
  }
  const Labels l = label_oracle(e, g, gripper);
  EXPECT_EQ(l.eval_label, 0);
  EXPECT_EQ(l.reason, LabelReason::misaligned);
}

TEST(Benchmark, AttemptsNeverExceedObjectsPlusFive) {
  BenchmarkConfig cfg;
  cfg.num_objects = 10;
  cfg.num_scenes = 1;
  cfg.samples_per_object = 800;
  cfg.oracle.align_cos = 1.0;  // no grasp can pass, so every scene runs to the cap
  const BenchmarkLog log = run_benchmark(cylinder_db(), cfg, 5);
  EXPECT_LE(log.attempts.size(), 15u);
  EXPECT_EQ(log.scenes[0].attempts, log.attempts.size());
  for (const auto& a : log.attempts) EXPECT_EQ(a.label, 0);
}

TEST(Benchmark, IsolatedCylindersAreCleared) {
  BenchmarkConfig cfg;
  cfg.num_objects = 2;
  cfg.num_scenes = 3;
  cfg.samples_per_object = 2000;
  const BenchmarkLog log = run_benchmark(cylinder_db(), cfg, 8);
  for (const auto& s : log.scenes) {
    EXPECT_EQ(s.successes, s.objects) << "scene " << s.scene_index;
    EXPECT_EQ(s.attempts, s.objects) << "scene " << s.scene_index;
  }
}

TEST(Benchmark, DeterministicAcrossJobs) {
  BenchmarkConfig cfg;
  cfg.num_objects = 2;
  cfg.num_scenes = 2;
  cfg.samples_per_object = 1000;
  const std::string a = attempt_log_jsonl(run_benchmark(cylinder_db(), cfg, 6, 1));
  EXPECT_EQ(a, attempt_log_jsonl(run_benchmark(cylinder_db(), cfg, 6, 2)));
  try {
    run_benchmark(DatabaseIndex{}, cfg, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::empty_database);
  }
}
