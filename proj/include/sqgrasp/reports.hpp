#pragma once

// Structured outputs of the command-line tools: JSON documents, the JSONL
// attempt log, the metrics report and CSV plot data.

#include <sqgrasp/config.hpp>
#include <sqgrasp/metrics.hpp>

namespace sqg {

inline constexpr int kReportVersion = 1;

inline Json to_json(const FitResult& f) {
  return Json{{"format_version", kReportVersion},
              {"superquadric", to_json(f.sq)},
              {"residual", f.residual},
              {"inlier_fraction", f.inlier_fraction},
              {"converged", f.converged},
              {"restart", f.restart}};
}

inline Json to_json(const MatchResult& m) {
  return Json{{"rank", m.rank},       {"id", m.candidate_id}, {"s", m.s},
              {"d_shape", m.d_shape}, {"d_eps", m.d_eps},     {"d_ratio", m.d_ratio},
              {"d_scale", m.d_scale}, {"d_abs", m.d_abs},     {"query_rep", m.query_rep},
              {"candidate_rep", m.candidate_rep}, {"transfer", to_json(m.transfer)}};
}

inline Json matches_json(const std::vector<MatchResult>& matches) {
  Json arr = Json::array();
  for (const auto& m : matches) arr.push_back(to_json(m));
  return Json{{"format_version", kReportVersion}, {"matches", arr}};
}

inline Json to_json(const PlanResult& p) {
  Json matches = Json::array();
  for (const auto& m : p.matches) matches.push_back(Json{{"rank", m.rank}, {"id", m.candidate_id}, {"s", m.s}});
  Json kept = Json::array();
  for (std::size_t i = 0; i < p.kept.size(); ++i) {
    Json g = to_json(p.kept[i]);
    if (i < p.refine_scores.size()) {
      g["refine_scores"] = Json::array({p.refine_scores[i][0], p.refine_scores[i][1], p.refine_scores[i][2]});
    }
    kept.push_back(g);
  }
  std::map<std::string, std::size_t> reasons;
  for (auto r : p.reasons) ++reasons[to_string(r)];
  Json filter = Json::object();
  for (const auto& [k, v] : reasons) filter[k] = v;
  Json j{{"format_version", kReportVersion},
         {"fit", to_json(p.fit.sq)},
         {"fit_residual", p.fit.residual},
         {"matches", matches},
         {"candidates", p.candidates.size()},
         {"filter", filter},
         {"kept", kept}};
  if (p.selection) {
    j["selection"] = Json{{"index", p.selection->index},
                          {"refinement", refinement_tag(p.selection->refinement.value_or(-1))},
                          {"score", p.selection->score}};
  } else {
    j["selection"] = nullptr;
  }
  j["chosen"] = p.chosen ? to_json(*p.chosen) : Json(nullptr);
  return j;
}

inline Json to_json(const AttemptRecord& a) {
  return Json{{"scene_seed", a.scene_seed},
              {"scene_index", a.scene_index},
              {"attempt_index", a.attempt_index},
              {"target_id", a.target_id},
              {"candidates", a.candidates},
              {"kept", a.kept},
              {"grasp", a.grasp ? to_json(*a.grasp) : Json(nullptr)},
              {"eval_score", a.eval_score},
              {"refined", a.refined},
              {"label", a.label},
              {"reason", a.reason}};
}

/// One JSON object per line; the first line is a header with the version.
inline std::string attempt_log_jsonl(const BenchmarkLog& log) {
  std::string out = Json{{"format_version", kReportVersion}, {"attempts", log.attempts.size()}}.dump() + "\n";
  for (const auto& a : log.attempts) out += to_json(a).dump() + "\n";
  return out;
}

inline AttemptLog to_attempt_log(const BenchmarkLog& log) {
  AttemptLog out;
  for (const auto& s : log.scenes) out.add_scene(s.scene_index, s.objects);
  for (const auto& a : log.attempts) out.add_attempt(a.scene_index, a.label == 1);
  return out;
}

inline Json to_json(const Metrics& m) {
  auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
  return Json{{"gsr", opt(m.gsr)}, {"tsr", opt(m.tsr)}, {"ga", m.ga}, {"successes", m.successes}, {"objects", m.objects}};
}

inline Json metrics_report(const BenchmarkLog& log) {
  std::size_t with_candidate = 0;
  std::map<std::string, std::size_t> reasons;
  for (const auto& a : log.attempts) {
    with_candidate += a.kept > 0 ? 1 : 0;
    ++reasons[a.reason];
  }
  Json by_reason = Json::object();
  for (const auto& [k, v] : reasons) by_reason[k] = v;
  Json j{{"format_version", kReportVersion}, {"scenes", log.scenes.size()}, {"attempts", log.attempts.size()}};
  if (!log.scenes.empty()) {
    const AttemptLog al = to_attempt_log(log);
    j["aggregate"] = to_json(compute_metrics(al, MetricsMode::aggregate));
    j["per_scene_mean"] = to_json(compute_metrics(al, MetricsMode::per_scene_mean));
  }
  j["candidate_rate"] = log.attempts.empty() ? Json(nullptr)
                                             : Json(static_cast<double>(with_candidate) /
                                                    static_cast<double>(log.attempts.size()));
  j["reasons"] = by_reason;
  return j;
}

inline Json to_json(const TrainingSample& s) {
  Json pts = Json::array();
  for (const auto& p : s.points) pts.push_back(to_json(p));
  Json j{{"format_version", kReportVersion},
         {"grasp", to_json(s.grasp)},
         {"points", pts},
         {"closure_indices", s.closure_indices},
         {"eval_label", s.eval_label ? Json(*s.eval_label) : Json(nullptr)},
         {"refine_labels", s.refine_labels ? Json(*s.refine_labels) : Json(nullptr)},
         {"provenance", s.provenance}};
  return j;
}

inline Json to_json(const SceneSpec& scene) {
  Json objs = Json::array();
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    const auto& o = scene.objects[i];
    objs.push_back(Json{{"index", i},
                        {"record_id", o.record_id},
                        {"family", to_string(o.shape.family)},
                        {"dims", to_json(o.shape.dims)},
                        {"pose", to_json(o.pose)}});
  }
  return Json{{"format_version", kReportVersion},
              {"camera", Json{{"pose", to_json(scene.camera.pose)}, {"fov_deg", scene.camera.fov_deg}}},
              {"target_index", scene.target_index},
              {"objects", objs}};
}

// ---------------------------------------------------------------------------
// Plot data

/// Surface samples of unit superquadrics over an (eps1, eps2) grid.
inline std::string gallery_csv(const std::vector<double>& eps_values, std::size_t samples, std::uint64_t seed) {
  std::string out = "eps1,eps2,x,y,z\n";
  char buf[160];
  std::uint64_t cell = 0;
  for (double e1 : eps_values) {
    for (double e2 : eps_values) {
      Superquadric sq;
      sq.axes = Vec3::Ones();
      sq.eps1 = e1;
      sq.eps2 = e2;
      const PointCloud pc = sample_surface(sq, samples, derive_seed(seed, "gallery", cell++));
      for (const auto& p : pc.points) {
        std::snprintf(buf, sizeof buf, "%.3f,%.3f,%.6f,%.6f,%.6f\n", e1, e2, p.x(), p.y(), p.z());
        out += buf;
      }
    }
  }
  return out;
}

/// Evaluation score of every kept candidate of every benchmark attempt.
inline std::string score_csv(const std::vector<std::pair<std::size_t, PlanResult>>& plans) {
  std::string out = "scene,candidate,score,source_id,chosen\n";
  char buf[200];
  for (const auto& [scene, plan] : plans) {
    for (std::size_t i = 0; i < plan.kept.size(); ++i) {
      const bool chosen = plan.selection && plan.selection->index == i;
      std::snprintf(buf, sizeof buf, "%zu,%zu,%.6f,%s,%d\n", scene, i, plan.kept[i].score.value_or(0.0),
                    plan.kept[i].provenance.source_id.c_str(), chosen ? 1 : 0);
      out += buf;
    }
  }
  return out;
}

}  // namespace sqg
