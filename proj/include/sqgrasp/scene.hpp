#pragma once

// Synthetic tabletop scenes: static placement of database primitives, a
// single fixed camera with back-face and ray-marched occlusion tests, a
// geometric grasp label oracle, and the decluttering benchmark loop.

#include <sqgrasp/planner.hpp>

namespace sqg {

struct Camera {
  RigidPose pose;  // optical axis is the local +z
  double fov_deg = 70.0;

  Vec3 position() const { return pose.t; }

  static Camera look_at(const Vec3& eye, const Vec3& target, double fov_deg = 70.0) {
    const Vec3 z = (target - eye).normalized();
    Vec3 x = z.cross(Vec3::UnitZ());
    if (x.norm() < 1e-9) x = Vec3::UnitX();
    x.normalize();
    const Vec3 y = z.cross(x);
    Camera c;
    c.pose.R.col(0) = x;
    c.pose.R.col(1) = y;
    c.pose.R.col(2) = z;
    c.pose.t = eye;
    c.fov_deg = fov_deg;
    return c;
  }

  bool in_view(const Vec3& p) const {
    const Vec3 d = p - pose.t;
    const double len = d.norm();
    return len > 0.0 && d.dot(pose.R.col(2)) / len >= std::cos(deg2rad(fov_deg / 2.0));
  }
};

struct SceneObject {
  std::string record_id;
  Shape shape;
  RigidPose pose;         // shape frame in the world
  RigidPose record_pose;  // record (superquadric) frame in the world
};

struct SceneSpec {
  double half_x = 0.25;
  double half_y = 0.25;
  std::vector<SceneObject> objects;
  Camera camera = Camera::look_at(Vec3(0.0, -0.35, 0.65), Vec3::Zero());
  int target_index = 0;
};

struct SceneConfig {
  std::size_t max_rejections = 1000;
  std::size_t check_samples = 600;
  double penetration_tol = 1e-3;
};

namespace detail {

// Resting orientations that put a flat face or a side on the table.
inline std::vector<Mat3> rest_rotations(Family f) {
  switch (f) {
    case Family::cuboid:
    case Family::ellipsoid: return {Mat3::Identity(), rot_x(kPi / 2.0), rot_y(kPi / 2.0)};
    case Family::cylinder:
    case Family::elliptical_cylinder: return {Mat3::Identity(), rot_x(kPi / 2.0)};
    case Family::frustum: return {Mat3::Identity(), rot_x(kPi)};
  }
  return {Mat3::Identity()};
}

inline bool penetrates(const PointCloud& a_world, const SceneObject& b, double tol) {
  for (const auto& p : a_world.points) {
    if (inside_value(b.shape, b.pose.apply_inverse(p)) < 1.0 - tol) return true;
  }
  return false;
}

}  // namespace detail

/// Samples of an object's surface in world coordinates.
inline PointCloud object_surface(const SceneObject& o, std::size_t count, std::uint64_t seed) {
  return sample_shape(o.shape, count, seed).transformed(o.pose);
}

inline SceneSpec make_scene(std::size_t num_objects, const DatabaseIndex& db, std::uint64_t seed,
                            const SceneConfig& cfg = {}) {
  if (db.empty()) throw Error(ErrorCode::empty_database, "make_scene: database is empty");
  if (num_objects == 0) throw Error(ErrorCode::invalid_argument, "make_scene: need at least one object");
  Rng rng = make_rng(seed, "make_scene");
  SceneSpec scene;
  std::vector<PointCloud> placed_samples;
  for (std::size_t k = 0; k < num_objects; ++k) {
    const auto& rec = db.records[std::uniform_int_distribution<std::size_t>(0, db.records.size() - 1)(rng)];
    const auto rests = detail::rest_rotations(rec.family);
    bool placed = false;
    for (std::size_t attempt = 0; attempt < cfg.max_rejections && !placed; ++attempt) {
      const Mat3 rest = rests[std::uniform_int_distribution<std::size_t>(0, rests.size() - 1)(rng)];
      const Mat3 R = rot_z(uniform(rng, 0.0, 2.0 * kPi)) * rest;
      const double lift = (R.transpose().col(2).cwiseAbs()).dot(rec.dims.cwiseMax(Vec3::Zero()));
      const Vec3 t(uniform(rng, -scene.half_x, scene.half_x), uniform(rng, -scene.half_y, scene.half_y), lift);
      SceneObject obj{rec.id, rec.shape(), {R, t}, {}};
      obj.record_pose = obj.pose * rec.shape_pose.inverse();
      const PointCloud pts = object_surface(obj, cfg.check_samples, derive_seed(seed, "placement_check", k));
      const bool inside_ws = std::all_of(pts.points.begin(), pts.points.end(), [&](const Vec3& p) {
        return std::abs(p.x()) <= scene.half_x && std::abs(p.y()) <= scene.half_y;
      });
      if (!inside_ws) continue;
      bool clash = false;
      for (std::size_t j = 0; j < scene.objects.size() && !clash; ++j) {
        const auto& other = scene.objects[j];
        const double reach = bounding_radius(obj.shape) + bounding_radius(other.shape);
        if ((obj.pose.t - other.pose.t).norm() > reach) continue;
        clash = detail::penetrates(pts, other, cfg.penetration_tol) ||
                detail::penetrates(placed_samples[j], obj, cfg.penetration_tol);
      }
      if (clash) continue;
      scene.objects.push_back(obj);
      placed_samples.push_back(pts);
      placed = true;
    }
    if (!placed) throw Error(ErrorCode::placement_failure, "make_scene: could not place object " + std::to_string(k));
  }
  scene.target_index = static_cast<int>(std::uniform_int_distribution<std::size_t>(0, num_objects - 1)(rng));
  return scene;
}

// ---------------------------------------------------------------------------
// Rendering

struct RenderConfig {
  double march_step = 0.002;
  double inside_tol = 1e-6;
  double table_spacing = 0.004;  // 0 disables table points
};

inline constexpr int kTableId = -1;

struct RenderResult {
  PointCloud cloud;
  std::vector<int> object_ids;  // kTableId for the table

  std::vector<std::size_t> indices_of(int id) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < object_ids.size(); ++i) {
      if (object_ids[i] == id) out.push_back(i);
    }
    return out;
  }
  std::vector<bool> mask(int id) const {
    std::vector<bool> m(object_ids.size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = object_ids[i] == id;
    return m;
  }
};

/// True when the segment from `p` to the camera passes through the interior
/// of any object other than `self`.
inline bool occluded(const SceneSpec& scene, const Vec3& p, int self, const RenderConfig& cfg) {
  const Vec3 d = scene.camera.position() - p;
  const double len = d.norm();
  const Vec3 u = d / len;
  for (std::size_t o = 0; o < scene.objects.size(); ++o) {
    if (static_cast<int>(o) == self) continue;
    const auto& obj = scene.objects[o];
    const double rad = bounding_radius(obj.shape);
    const Vec3 m = p - obj.pose.t;
    const double b = m.dot(u);
    const double disc = b * b - (m.squaredNorm() - rad * rad);
    if (disc < 0.0) continue;
    const double s0 = std::max(-b - std::sqrt(disc), cfg.march_step);
    const double s1 = std::min(-b + std::sqrt(disc), len);
    if (s1 < s0) continue;
    for (auto k = static_cast<long>(std::ceil(s0 / cfg.march_step)); k * cfg.march_step <= s1; ++k) {
      const Vec3 q = p + (static_cast<double>(k) * cfg.march_step) * u;
      if (inside_value(obj.shape, obj.pose.apply_inverse(q)) < 1.0 - cfg.inside_tol) return true;
    }
  }
  return false;
}

inline bool visible(const SceneSpec& scene, const Vec3& p, const Vec3& n, int self, const RenderConfig& cfg) {
  return n.dot(scene.camera.position() - p) > 0.0 && scene.camera.in_view(p) && !occluded(scene, p, self, cfg);
}

inline RenderResult render_single_view(const SceneSpec& scene, std::size_t samples_per_object, std::uint64_t seed,
                                       const RenderConfig& cfg = {}) {
  RenderResult out;
  for (std::size_t o = 0; o < scene.objects.size(); ++o) {
    const PointCloud pts = object_surface(scene.objects[o], samples_per_object, derive_seed(seed, "render", o));
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (visible(scene, pts.points[i], pts.normals[i], static_cast<int>(o), cfg)) {
        out.cloud.push_back(pts.points[i], pts.normals[i]);
        out.object_ids.push_back(static_cast<int>(o));
      }
    }
  }
  if (cfg.table_spacing > 0.0 && !scene.objects.empty()) {
    const auto nx = static_cast<long>(std::floor(scene.half_x / cfg.table_spacing));
    const auto ny = static_cast<long>(std::floor(scene.half_y / cfg.table_spacing));
    for (long i = -nx; i <= nx; ++i) {
      for (long j = -ny; j <= ny; ++j) {
        const Vec3 p(static_cast<double>(i) * cfg.table_spacing, static_cast<double>(j) * cfg.table_spacing, 0.0);
        if (visible(scene, p, Vec3::UnitZ(), kTableId, cfg)) {
          out.cloud.push_back(p, Vec3::UnitZ());
          out.object_ids.push_back(kTableId);
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Label oracle

struct LabelOracleConfig {
  double align_cos = 0.9;
  double opposition_min_deg = 170.0;
  double contact_band = 0.0005;
  double surface_density = 2e5;  // dense samples per square meter
  std::size_t min_samples = 3000;
};

enum class LabelReason { success, collision_object, collision_table, collision_target, no_contact, misaligned };

inline const char* to_string(LabelReason r) {
  switch (r) {
    case LabelReason::success: return "success";
    case LabelReason::collision_object: return "collision_object";
    case LabelReason::collision_table: return "collision_table";
    case LabelReason::collision_target: return "collision_target";
    case LabelReason::no_contact: return "no_contact";
    case LabelReason::misaligned: return "misaligned";
  }
  return "unknown";
}

/// Dense complete surfaces of every object, built once per scene state.
struct OracleSurfaces {
  std::vector<PointCloud> objects;
};

inline OracleSurfaces oracle_surfaces(const SceneSpec& scene, std::uint64_t seed, const LabelOracleConfig& cfg = {}) {
  OracleSurfaces s;
  for (std::size_t o = 0; o < scene.objects.size(); ++o) {
    const auto& obj = scene.objects[o];
    const auto count = std::max(cfg.min_samples,
                                static_cast<std::size_t>(std::ceil(cfg.surface_density * surface_area(obj.shape))));
    s.objects.push_back(object_surface(obj, count, derive_seed(seed, "oracle", o)));
  }
  return s;
}

inline LabelReason label_one(const SceneSpec& scene, const OracleSurfaces& surf, const Grasp& grasp,
                             const GripperSpec& gripper, const LabelOracleConfig& cfg = {}) {
  const auto boxes = body_boxes(grasp.w, gripper);
  for (const auto& b : boxes) {
    for (int c = 0; c < 8; ++c) {
      const Vec3 corner((c & 1) ? b.hi.x() : b.lo.x(), (c & 2) ? b.hi.y() : b.lo.y(), (c & 4) ? b.hi.z() : b.lo.z());
      if (grasp.pose().apply(corner).z() < 0.0) return LabelReason::collision_table;
    }
  }
  for (std::size_t o = 0; o < surf.objects.size(); ++o) {
    for (const auto& p : surf.objects[o].points) {
      const Vec3 l = grasp.to_local(p);
      for (const auto& b : boxes) {
        if (b.contains(l)) {
          return static_cast<int>(o) == scene.target_index ? LabelReason::collision_target
                                                           : LabelReason::collision_object;
        }
      }
    }
  }
  const PointCloud& target = surf.objects.at(static_cast<std::size_t>(scene.target_index));
  const auto closure = closure_region(target, grasp, gripper);
  if (closure.empty()) return LabelReason::no_contact;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (auto i : closure) {
    const double x = grasp.closing().dot(target.points[i] - grasp.p);
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  if (hi - lo <= 2.0 * cfg.contact_band) return LabelReason::no_contact;
  Vec3 nl = Vec3::Zero(), nr = Vec3::Zero();
  for (auto i : closure) {
    const double x = grasp.closing().dot(target.points[i] - grasp.p);
    if (x <= lo + cfg.contact_band) nl += target.normals[i];
    if (x >= hi - cfg.contact_band) nr += target.normals[i];
  }
  if (nl.norm() < 1e-12 || nr.norm() < 1e-12) return LabelReason::misaligned;
  nl.normalize();
  nr.normalize();
  const double opposition = rad2deg(std::acos(std::clamp(nl.dot(nr), -1.0, 1.0)));
  const Vec3 x = grasp.closing();
  if (opposition < cfg.opposition_min_deg || -nl.dot(x) < cfg.align_cos || nr.dot(x) < cfg.align_cos) {
    return LabelReason::misaligned;
  }
  return LabelReason::success;
}

struct Labels {
  int eval_label = 0;
  std::array<int, 3> refine_labels = {0, 0, 0};
  LabelReason reason = LabelReason::no_contact;
};

inline Labels label_oracle(const SceneSpec& scene, const OracleSurfaces& surf, const Grasp& grasp,
                           const GripperSpec& gripper, const LabelOracleConfig& cfg = {},
                           const RefinementConfig& refine = {}) {
  Labels l;
  l.reason = label_one(scene, surf, grasp, gripper, cfg);
  l.eval_label = l.reason == LabelReason::success ? 1 : 0;
  const auto cands = refinement_candidates(grasp, refine);
  for (std::size_t k = 0; k < 3; ++k) {
    l.refine_labels[k] = label_one(scene, surf, cands[k], gripper, cfg) == LabelReason::success ? 1 : 0;
  }
  return l;
}

inline Labels label_oracle(const SceneSpec& scene, const Grasp& grasp, const GripperSpec& gripper,
                           const LabelOracleConfig& cfg = {}, std::uint64_t seed = 0) {
  return label_oracle(scene, oracle_surfaces(scene, seed, cfg), grasp, gripper, cfg);
}

// ---------------------------------------------------------------------------
// Benchmark

/// Planner defaults for tabletop scenes: the table plane z = 0 is known.
inline PlannerConfig tabletop_planner() {
  PlannerConfig pc;
  pc.support_z = 0.0;
  pc.fit.support_z = 0.0;
  pc.fit.max_points = 250;
  pc.fit.max_iters = 60;
  return pc;
}

struct BenchmarkConfig {
  std::size_t num_objects = 5;
  std::size_t num_scenes = 30;
  std::size_t attempt_cap_extra = 5;
  std::size_t samples_per_object = 4000;
  PlannerConfig planner = tabletop_planner();
  SceneConfig scene;
  RenderConfig render;
  LabelOracleConfig oracle;
};

struct AttemptRecord {
  std::uint64_t scene_seed = 0;
  std::size_t scene_index = 0;
  std::size_t attempt_index = 0;
  std::string target_id;
  std::size_t candidates = 0;  // transferred grasps
  std::size_t kept = 0;        // after the coarse filter
  std::optional<Grasp> grasp;
  double eval_score = 0.0;
  bool refined = false;
  int label = 0;
  std::string reason;
};

struct SceneSummary {
  std::size_t scene_index = 0;
  std::uint64_t scene_seed = 0;
  std::size_t objects = 0;
  std::size_t attempts = 0;
  std::size_t successes = 0;
};

struct BenchmarkLog {
  std::vector<AttemptRecord> attempts;
  std::vector<SceneSummary> scenes;
};

inline std::vector<AttemptRecord> run_scene(const DatabaseIndex& db, const BenchmarkConfig& cfg,
                                            std::size_t scene_index, std::uint64_t scene_seed) {
  SceneSpec scene = make_scene(cfg.num_objects, db, scene_seed, cfg.scene);
  const Vec3 cam = scene.camera.position();
  Rng rng = make_rng(scene_seed, "targets");
  std::vector<AttemptRecord> log;
  const std::size_t cap = cfg.num_objects + cfg.attempt_cap_extra;
  // Objects that yielded no grasp are skipped until the scene changes; the
  // same view would plan the same way.
  std::vector<bool> unplannable(scene.objects.size(), false);
  for (std::size_t a = 0; a < cap && !scene.objects.empty(); ++a) {
    std::vector<int> open;
    for (std::size_t o = 0; o < scene.objects.size(); ++o) {
      if (!unplannable[o]) open.push_back(static_cast<int>(o));
    }
    if (open.empty()) break;
    scene.target_index = open[std::uniform_int_distribution<std::size_t>(0, open.size() - 1)(rng)];
    const std::uint64_t attempt_seed = derive_seed(scene_seed, "attempt", a);
    const RenderResult view = render_single_view(scene, cfg.samples_per_object, attempt_seed, cfg.render);
    AttemptRecord rec;
    rec.scene_seed = scene_seed;
    rec.scene_index = scene_index;
    rec.attempt_index = a;
    rec.target_id = scene.objects[static_cast<std::size_t>(scene.target_index)].record_id;
    const auto tidx = view.indices_of(scene.target_index);
    const PointCloud target = view.cloud.subset(tidx);
    // With a known support plane the table is handled by the planner's
    // support rule rather than as clutter.
    const bool table_known = cfg.planner.support_z.has_value();
    std::vector<Vec3> context;
    for (std::size_t i = 0; i < view.cloud.size(); ++i) {
      const int id = view.object_ids[i];
      if (id != scene.target_index && !(table_known && id == kTableId)) context.push_back(view.cloud.points[i]);
    }
    std::optional<PlanResult> plan;
    if (target.size() >= 20) {
      PlannerConfig pc = cfg.planner;
      pc.fit.view_direction = (target.centroid() - cam).normalized();
      try {
        plan = plan_grasps(target, context, db, pc, attempt_seed);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::unfittable_input) throw;
      }
    }
    if (plan) {
      rec.candidates = plan->candidates.size();
      rec.kept = plan->kept.size();
    }
    if (!plan || !plan->chosen) {
      rec.reason = !plan ? "unfittable" : rec.kept == 0 ? "no_candidate" : "below_threshold";
      log.push_back(rec);
      unplannable[static_cast<std::size_t>(scene.target_index)] = true;
      continue;
    }
    rec.grasp = plan->chosen;
    rec.eval_score = plan->selection->score;
    rec.refined = plan->selection->refinement.has_value();
    const OracleSurfaces surf = oracle_surfaces(scene, attempt_seed, cfg.oracle);
    const Labels labels = label_oracle(scene, surf, *plan->chosen, cfg.planner.gripper, cfg.oracle, cfg.planner.refine);
    rec.label = labels.eval_label;
    rec.reason = to_string(labels.reason);
    log.push_back(rec);
    if (rec.label == 1) {
      scene.objects.erase(scene.objects.begin() + scene.target_index);
      unplannable.assign(scene.objects.size(), false);
    }
  }
  return log;
}

inline BenchmarkLog run_benchmark(const DatabaseIndex& db, const BenchmarkConfig& cfg, std::uint64_t seed,
                                  int jobs = 1) {
  if (db.empty()) throw Error(ErrorCode::empty_database, "run_benchmark: database is empty");
  std::vector<std::vector<AttemptRecord>> per_scene(cfg.num_scenes);
  parallel_for(cfg.num_scenes, jobs,
               [&](std::size_t k) { per_scene[k] = run_scene(db, cfg, k, derive_seed(seed, "scene", k)); });
  BenchmarkLog log;
  for (std::size_t k = 0; k < cfg.num_scenes; ++k) {
    SceneSummary s{k, derive_seed(seed, "scene", k), cfg.num_objects, per_scene[k].size(), 0};
    for (const auto& a : per_scene[k]) {
      s.successes += static_cast<std::size_t>(a.label);
      log.attempts.push_back(a);
    }
    log.scenes.push_back(s);
  }
  return log;
}

}  // namespace sqg
