#pragma once

// Parallel-jaw grasps: gripper geometry, closure-region cropping, the
// three-rule coarse filter, refinement candidates, region export for
// training, analytic scoring and the final selection rule.

#include <sqgrasp/common.hpp>
#include <sqgrasp/sampling.hpp>

#include <array>
#include <limits>
#include <numeric>

namespace sqg {

/// Gripper geometry in the gripper frame: x closes, y spans the finger
/// depth, z approaches. The origin sits midway between the fingertips.
struct GripperSpec {
  double max_opening = 0.10;
  double finger_length = 0.04;
  double finger_depth = 0.02;
  double finger_thickness = 0.01;
  double palm_depth = 0.02;
  double clearance = 0.0125;  // per side
  double collision_margin = 0.002;

  void validate() const {
    const std::array<double, 7> v = {max_opening, finger_length, finger_depth, finger_thickness,
                                     palm_depth,  clearance,     collision_margin};
    for (double x : v) {
      if (!(x > 0.0) || !std::isfinite(x)) throw Error(ErrorCode::invalid_argument, "gripper dimensions must be positive");
    }
  }
};

struct GraspProvenance {
  std::string source_id;  // database record the grasp came from, if any
  int rank = -1;          // match rank of that record
  int refinement = -1;    // -1 unrefined, else index into {-15, 0, +15} degrees
};

struct Grasp {
  Vec3 p = Vec3::Zero();
  Mat3 R = Mat3::Identity();  // columns: closing, lateral, approach
  double w = 0.05;
  std::optional<double> score;
  GraspProvenance provenance;

  RigidPose pose() const { return {R, p}; }
  Vec3 closing() const { return R.col(0); }
  Vec3 approach() const { return R.col(2); }
  Vec3 to_local(const Vec3& q) const { return R.transpose() * (q - p); }

  bool valid(const GripperSpec& gripper) const {
    return p.allFinite() && is_rotation(R) && w > 0.0 && w <= gripper.max_opening + 1e-12;
  }
};

/// Grasp moved by a rigid transform (left composition).
inline Grasp transformed(const Grasp& g, const RigidPose& T) {
  Grasp out = g;
  out.p = T.apply(g.p);
  out.R = T.R * g.R;
  return out;
}

// ---------------------------------------------------------------------------
// Gripper-frame boxes

inline Box closure_box(double w, const GripperSpec& gripper) {
  return {Vec3(-w / 2.0, -gripper.finger_depth / 2.0, -gripper.finger_length),
          Vec3(w / 2.0, gripper.finger_depth / 2.0, 0.0)};
}

/// Left finger, right finger, palm (not inflated).
inline std::array<Box, 3> body_boxes(double w, const GripperSpec& gripper) {
  const double hy = gripper.finger_depth / 2.0;
  const double outer = w / 2.0 + gripper.finger_thickness;
  const double L = gripper.finger_length;
  return {Box{Vec3(-outer, -hy, -L), Vec3(-w / 2.0, hy, 0.0)},
          Box{Vec3(w / 2.0, -hy, -L), Vec3(outer, hy, 0.0)},
          Box{Vec3(-outer, -hy, -L - gripper.palm_depth), Vec3(outer, hy, -L)}};
}

inline std::vector<std::size_t> closure_region(const PointCloud& cloud, const Grasp& grasp,
                                               const GripperSpec& gripper) {
  const Box box = closure_box(grasp.w, gripper);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (box.contains(grasp.to_local(cloud.points[i]))) idx.push_back(i);
  }
  return idx;
}

/// True if any point falls inside an inflated finger or palm box.
inline bool body_collides(const std::vector<Vec3>& points, const Grasp& grasp, const GripperSpec& gripper) {
  const auto boxes = body_boxes(grasp.w, gripper);
  for (const auto& q : points) {
    const Vec3 l = grasp.to_local(q);
    for (const auto& b : boxes) {
      if (b.inflated(gripper.collision_margin).contains(l)) return true;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// Coarse filter

struct FilterConfig {
  std::size_t min_closure_points = 50;
  double max_contact_angle_deg = 20.0;
};

enum class FilterReason { kept, collision, too_few_points, contact_angle };

inline const char* to_string(FilterReason r) {
  switch (r) {
    case FilterReason::kept: return "kept";
    case FilterReason::collision: return "collision";
    case FilterReason::too_few_points: return "too_few_points";
    case FilterReason::contact_angle: return "contact_angle";
  }
  return "unknown";
}

struct FilterResult {
  std::vector<Grasp> kept;
  std::vector<FilterReason> reasons;  // one per candidate, in input order
};

/// Fingertip contacts: the closure points nearest the left and right inner
/// finger planes (minimum and maximum local x; first index on ties).
struct Contacts {
  std::size_t left = 0;
  std::size_t right = 0;
};

inline std::optional<Contacts> fingertip_contacts(const PointCloud& cloud, const std::vector<std::size_t>& closure,
                                                  const Grasp& grasp) {
  if (closure.empty()) return std::nullopt;
  Contacts c{closure.front(), closure.front()};
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (auto i : closure) {
    const double x = grasp.closing().dot(cloud.points[i] - grasp.p);
    if (x < lo) {
      lo = x;
      c.left = i;
    }
    if (x > hi) {
      hi = x;
      c.right = i;
    }
  }
  return c;
}

/// Angle in degrees between the closing axis and a normal, ignoring sign.
inline double contact_angle_deg(const Grasp& grasp, const Vec3& normal) {
  const double c = std::min(1.0, std::abs(grasp.closing().dot(normal.normalized())));
  return rad2deg(std::acos(c));
}

inline FilterReason filter_one(const Grasp& grasp, const PointCloud& target, const GripperSpec& gripper,
                               const FilterConfig& cfg = {}) {
  if (body_collides(target.points, grasp, gripper)) return FilterReason::collision;
  const auto closure = closure_region(target, grasp, gripper);
  if (closure.size() < cfg.min_closure_points) return FilterReason::too_few_points;
  const auto c = fingertip_contacts(target, closure, grasp);
  if (!c || contact_angle_deg(grasp, target.normals[c->left]) > cfg.max_contact_angle_deg ||
      contact_angle_deg(grasp, target.normals[c->right]) > cfg.max_contact_angle_deg) {
    return FilterReason::contact_angle;
  }
  return FilterReason::kept;
}

inline FilterResult coarse_filter(const std::vector<Grasp>& candidates, const PointCloud& target,
                                  const GripperSpec& gripper, const FilterConfig& cfg = {}, int jobs = 1) {
  if (!target.has_normals() && !target.empty()) {
    throw Error(ErrorCode::missing_normals, "coarse_filter: target cloud needs normals");
  }
  FilterResult out;
  out.reasons.resize(candidates.size(), FilterReason::too_few_points);
  if (target.empty()) return out;
  parallel_for(candidates.size(), jobs,
               [&](std::size_t i) { out.reasons[i] = filter_one(candidates[i], target, gripper, cfg); });
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (out.reasons[i] == FilterReason::kept) out.kept.push_back(candidates[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Refinement

struct RefinementConfig {
  double deepen = 0.008;
  std::array<double, 3> angles_deg = {-15.0, 0.0, 15.0};
};

inline std::array<Grasp, 3> refinement_candidates(const Grasp& grasp, const RefinementConfig& cfg = {}) {
  std::array<Grasp, 3> out;
  for (std::size_t k = 0; k < 3; ++k) {
    Grasp g = grasp;
    g.p = grasp.p + cfg.deepen * grasp.approach();
    g.R = grasp.R * rot_z(deg2rad(cfg.angles_deg[k]));
    g.score.reset();
    g.provenance.refinement = static_cast<int>(k);
    out[k] = g;
  }
  return out;
}

struct RegionCrop {
  std::vector<std::size_t> expanded_indices;  // into the source cloud
  std::vector<std::size_t> closure_indices;   // into expanded_indices
  PointCloud gripper_frame_points;            // expanded subset in the original grasp frame
};

inline RegionCrop expand_region(const PointCloud& cloud, const Grasp& grasp, const GripperSpec& gripper,
                                const RefinementConfig& refine = {}) {
  const auto cands = refinement_candidates(grasp, refine);
  const Box box = closure_box(grasp.w, gripper);
  RegionCrop crop;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& q = cloud.points[i];
    const bool in_closure = box.contains(grasp.to_local(q));
    bool in_union = in_closure;
    for (const auto& c : cands) {
      if (in_union) break;
      in_union = box.contains(c.to_local(q));
    }
    if (!in_union) continue;
    if (in_closure) crop.closure_indices.push_back(crop.expanded_indices.size());
    crop.expanded_indices.push_back(i);
  }
  const RigidPose to_grasp = grasp.pose().inverse();
  crop.gripper_frame_points = cloud.subset(crop.expanded_indices).transformed(to_grasp);
  return crop;
}

/// One training record: the cropped, downsampled region in the grasp frame
/// with the anchor (closure) indices and empty label slots.
struct TrainingSample {
  std::vector<Vec3> points;                  // expanded_target points
  std::vector<std::size_t> closure_indices;  // closure_target indices into points
  Grasp grasp;
  std::optional<int> eval_label;
  std::optional<std::array<int, 3>> refine_labels;
  std::string provenance;
};

struct ExportTargets {
  std::size_t expanded = 960;
  std::size_t closure = 345;
};

inline TrainingSample export_sample(const PointCloud& cloud, const Grasp& grasp, const GripperSpec& gripper,
                                    double noise_sigma, const ExportTargets& targets, std::uint64_t seed,
                                    const RefinementConfig& refine = {}) {
  if (targets.closure == 0 || targets.expanded < targets.closure) {
    throw Error(ErrorCode::invalid_argument, "export_sample: need 0 < closure target <= expanded target");
  }
  PointCloud noisy;
  noisy.points = cloud.points;
  if (noise_sigma > 0.0) {
    Rng rng = make_rng(seed, "export_noise");
    std::normal_distribution<double> n(0.0, noise_sigma);
    for (auto& q : noisy.points) q += Vec3(n(rng), n(rng), n(rng));
  }
  const RegionCrop crop = expand_region(noisy, grasp, gripper, refine);
  if (crop.expanded_indices.empty()) throw Error(ErrorCode::empty_region, "export_sample: expanded region is empty");
  if (crop.closure_indices.empty()) throw Error(ErrorCode::empty_region, "export_sample: closure region is empty");

  const auto& local = crop.gripper_frame_points.points;
  std::vector<std::size_t> all(local.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  // Closure points are chosen first so they occupy the leading positions.
  const auto anchor = farthest_point_sampling(local, crop.closure_indices, targets.closure);
  auto order = farthest_point_sampling(local, all, targets.expanded, anchor);
  order = pad_cyclic(std::move(order), targets.expanded);

  TrainingSample s;
  s.points.reserve(order.size());
  for (auto i : order) s.points.push_back(local[i]);
  std::vector<std::size_t> head(anchor.size());
  std::iota(head.begin(), head.end(), std::size_t{0});
  s.closure_indices = pad_cyclic(std::move(head), targets.closure);
  s.grasp = grasp;
  return s;
}

// ---------------------------------------------------------------------------
// Scoring and selection

struct ScoreConfig {
  double fill_points = 200.0;
  double clearance_scale = 0.01;
};

struct ScoreTerms {
  double alignment = 0.0;
  double fill = 0.0;
  double clearance = 1.0;
  double score() const { return alignment * fill * clearance; }
};

/// `context` holds scene points that do not belong to the target; clearance
/// is their distance to the finger boxes (1 when there is no context).
inline ScoreTerms analytic_score_terms(const Grasp& grasp, const PointCloud& target, const GripperSpec& gripper,
                                       const std::vector<Vec3>& context = {}, const ScoreConfig& cfg = {}) {
  ScoreTerms t;
  if (!target.has_normals()) return t;
  const auto closure = closure_region(target, grasp, gripper);
  const auto c = fingertip_contacts(target, closure, grasp);
  if (!c) return t;
  const double cos_l = std::abs(grasp.closing().dot(target.normals[c->left]));
  const double cos_r = std::abs(grasp.closing().dot(target.normals[c->right]));
  t.alignment = std::clamp(0.5 * (cos_l + cos_r), 0.0, 1.0);
  t.fill = std::min(1.0, static_cast<double>(closure.size()) / cfg.fill_points);
  const auto boxes = body_boxes(grasp.w, gripper);
  double d = std::numeric_limits<double>::infinity();
  for (const auto& q : context) {
    const Vec3 l = grasp.to_local(q);
    d = std::min({d, boxes[0].distance(l), boxes[1].distance(l)});
  }
  t.clearance = std::isfinite(d) ? 1.0 - std::exp(-d / cfg.clearance_scale) : 1.0;
  return t;
}

inline double analytic_score(const Grasp& grasp, const PointCloud& target, const GripperSpec& gripper,
                             const std::vector<Vec3>& context = {}, const ScoreConfig& cfg = {}) {
  return std::clamp(analytic_score_terms(grasp, target, gripper, context, cfg).score(), 0.0, 1.0);
}

struct Selection {
  std::size_t index = 0;          // initial grasp index
  std::optional<int> refinement;  // set when a refinement candidate was chosen
  double score = 0.0;
};

inline std::optional<Selection> select_and_refine(const std::vector<double>& eval_scores,
                                                  const std::vector<std::array<double, 3>>& refine_scores,
                                                  double eval_threshold = 0.7, double refine_threshold = 0.7) {
  if (!refine_scores.empty() && refine_scores.size() != eval_scores.size()) {
    throw Error(ErrorCode::invalid_argument, "select_and_refine: score lists must align");
  }
  std::optional<Selection> best_eval;
  for (std::size_t i = 0; i < eval_scores.size(); ++i) {
    if (!best_eval || eval_scores[i] > best_eval->score) best_eval = Selection{i, std::nullopt, eval_scores[i]};
  }
  if (best_eval && best_eval->score > eval_threshold) return best_eval;
  std::optional<Selection> best_ref;
  for (std::size_t i = 0; i < refine_scores.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      const double s = refine_scores[i][static_cast<std::size_t>(k)];
      if (!best_ref || s > best_ref->score) best_ref = Selection{i, k, s};
    }
  }
  if (best_ref && best_ref->score > refine_threshold) return best_ref;
  return std::nullopt;
}

}  // namespace sqg
