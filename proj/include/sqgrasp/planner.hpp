#pragma once

// End-to-end grasp planning for one segmented target: fit, retrieve,
// transfer, coarse filter, analytic scoring and selection.

#include <sqgrasp/matcher.hpp>

namespace sqg {

struct PlannerConfig {
  FitConfig fit;
  MatcherConfig matcher;
  GripperSpec gripper;
  FilterConfig filter;
  RefinementConfig refine;
  ScoreConfig score;
  double eval_threshold = 0.7;
  double refine_threshold = 0.7;
  // Fill unobserved parts of the target with samples of the fitted
  // superquadric before filtering and scoring.
  bool complete_target = true;
  double completion_gap = 0.003;
  // Height of a known horizontal support (world z); hand poses reaching below
  // it plus the margin score zero.
  std::optional<double> support_z;
  double support_margin = 0.002;
};

struct PlanResult {
  FitResult fit;
  std::vector<MatchResult> matches;
  PointCloud filter_target;           // observed target, plus completion samples when enabled
  std::vector<Grasp> candidates;      // transferred, before filtering
  std::vector<FilterReason> reasons;  // per candidate
  std::vector<Grasp> kept;            // filtered, with evaluation scores
  std::vector<std::array<double, 3>> refine_scores;
  std::optional<Selection> selection;
  std::optional<Grasp> chosen;
};

/// Observed points plus fitted-surface samples farther than `gap` from any
/// observed point.
inline PointCloud complete_with_fit(const PointCloud& observed, const Superquadric& sq, double gap,
                                    std::uint64_t seed) {
  PointCloud out = observed;
  const std::size_t count = std::max<std::size_t>(2 * observed.size(), 200);
  const PointCloud samples = sample_surface(sq, count, seed);
  const PointGrid grid(observed.points, gap);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (grid.within(samples.points[i], gap).empty()) out.push_back(samples.points[i], samples.normals[i]);
  }
  return out;
}

inline bool below_support(const Grasp& g, const GripperSpec& gripper, double support_z, double margin) {
  for (const auto& b : body_boxes(g.w, gripper)) {
    for (int c = 0; c < 8; ++c) {
      const Vec3 corner((c & 1) ? b.hi.x() : b.lo.x(), (c & 2) ? b.hi.y() : b.lo.y(), (c & 4) ? b.hi.z() : b.lo.z());
      if (g.pose().apply(corner).z() < support_z + margin) return true;
    }
  }
  return false;
}

/// Evaluation-side score: analytic score, zero when the hand hits the target
/// or the known support.
inline double candidate_score(const Grasp& g, const PointCloud& target, const std::vector<Vec3>& context,
                              const PlannerConfig& cfg) {
  if (cfg.support_z && below_support(g, cfg.gripper, *cfg.support_z, cfg.support_margin)) return 0.0;
  if (body_collides(target.points, g, cfg.gripper)) return 0.0;
  return analytic_score(g, target, cfg.gripper, context, cfg.score);
}

inline PlanResult plan_grasps(const PointCloud& target, const std::vector<Vec3>& context, const DatabaseIndex& db,
                              const PlannerConfig& cfg, std::uint64_t seed, int jobs = 1) {
  if (!target.has_normals()) throw Error(ErrorCode::missing_normals, "plan_grasps: target cloud needs normals");
  PlanResult res;
  res.fit = canonicalize(fit_superquadric(target, cfg.fit));
  res.matches = retrieve(res.fit, db, cfg.matcher, jobs);
  for (const auto& m : res.matches) {
    const auto gs = transfer_grasps(m, db.at(m.candidate_id), res.fit, cfg.matcher);
    for (const auto& g : gs) {
      if (g.w <= cfg.gripper.max_opening) res.candidates.push_back(g);
    }
  }
  res.filter_target = cfg.complete_target
                          ? complete_with_fit(target, res.fit.sq, cfg.completion_gap, derive_seed(seed, "completion"))
                          : target;
  auto filtered = coarse_filter(res.candidates, res.filter_target, cfg.gripper, cfg.filter, jobs);
  res.reasons = std::move(filtered.reasons);
  res.kept = std::move(filtered.kept);

  std::vector<double> eval(res.kept.size());
  res.refine_scores.assign(res.kept.size(), {0.0, 0.0, 0.0});
  parallel_for(res.kept.size(), jobs, [&](std::size_t i) {
    eval[i] = candidate_score(res.kept[i], res.filter_target, context, cfg);
    const auto cands = refinement_candidates(res.kept[i], cfg.refine);
    for (std::size_t k = 0; k < 3; ++k) res.refine_scores[i][k] = candidate_score(cands[k], res.filter_target, context, cfg);
  });
  for (std::size_t i = 0; i < res.kept.size(); ++i) res.kept[i].score = eval[i];

  res.selection = select_and_refine(eval, res.refine_scores, cfg.eval_threshold, cfg.refine_threshold);
  if (res.selection) {
    Grasp g = res.kept[res.selection->index];
    if (res.selection->refinement) {
      g = refinement_candidates(g, cfg.refine)[static_cast<std::size_t>(*res.selection->refinement)];
    }
    g.score = res.selection->score;
    res.chosen = g;
  }
  return res;
}

}  // namespace sqg
