#pragma once

// Run configuration: every tunable of the pipeline in one value with a
// lossless JSON form and SQGRASP_<SECTION>__<KEY> environment overrides.

#include <sqgrasp/scene.hpp>

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <variant>

namespace sqg {

inline constexpr int kConfigVersion = 1;
inline constexpr const char* kEnvPrefix = "SQGRASP_";

struct ExportConfig {
  double noise_sigma = 0.001;
  ExportTargets targets;
  std::size_t scenes = 2;
  std::size_t samples_per_scene = 8;
};

struct Config {
  std::uint64_t seed = 0;
  GridSpec grid;
  GripperSpec gripper;
  FitConfig fit;
  MatcherConfig matcher;
  FilterConfig filter;
  RefinementConfig refine;
  ScoreConfig score;
  double eval_threshold = 0.7;
  double refine_threshold = 0.7;
  bool complete_target = true;
  double completion_gap = 0.003;
  ExportConfig export_;
  std::size_t bench_objects = 5;
  std::size_t bench_scenes = 30;
  std::size_t attempt_cap_extra = 5;
  std::size_t samples_per_object = 4000;
  std::size_t bench_fit_points = 250;
  int bench_fit_iters = 60;
  double support_margin = 0.002;
  LabelOracleConfig oracle;
  RenderConfig render;

  void validate() const {
    grid.validate();
    gripper.validate();
    matcher.validate();
    if (fit.restarts < 1 || fit.max_iters < 1 || !(fit.eps_low < fit.eps_high) || !(fit.axis_cap > 0.0)) {
      throw Error(ErrorCode::config_error, "fit settings out of range");
    }
    if (filter.min_closure_points == 0 || !(filter.max_contact_angle_deg > 0.0)) {
      throw Error(ErrorCode::config_error, "filter settings out of range");
    }
    if (!(eval_threshold >= 0.0 && eval_threshold <= 1.0 && refine_threshold >= 0.0 && refine_threshold <= 1.0)) {
      throw Error(ErrorCode::config_error, "thresholds must lie in [0,1]");
    }
    if (!(export_.noise_sigma >= 0.0) || export_.targets.closure == 0 ||
        export_.targets.expanded < export_.targets.closure) {
      throw Error(ErrorCode::config_error, "export settings out of range");
    }
    if (bench_objects == 0 || samples_per_object == 0) throw Error(ErrorCode::config_error, "benchmark sizes must be positive");
  }

  PlannerConfig planner() const {
    PlannerConfig pc;
    pc.fit = fit;
    pc.matcher = matcher;
    pc.gripper = gripper;
    pc.filter = filter;
    pc.refine = refine;
    pc.score = score;
    pc.eval_threshold = eval_threshold;
    pc.refine_threshold = refine_threshold;
    pc.complete_target = complete_target;
    pc.completion_gap = completion_gap;
    pc.support_margin = support_margin;
    return pc;
  }

  /// Planner for tabletop scenes: known table plane and the lighter fit.
  PlannerConfig tabletop() const {
    PlannerConfig pc = planner();
    pc.support_z = 0.0;
    pc.fit.support_z = 0.0;
    pc.fit.max_points = bench_fit_points;
    pc.fit.max_iters = bench_fit_iters;
    return pc;
  }

  BenchmarkConfig benchmark() const {
    BenchmarkConfig b;
    b.num_objects = bench_objects;
    b.num_scenes = bench_scenes;
    b.attempt_cap_extra = attempt_cap_extra;
    b.samples_per_object = samples_per_object;
    b.planner = tabletop();
    b.render = render;
    b.oracle = oracle;
    return b;
  }
};

namespace detail {

static_assert(std::is_same_v<std::size_t, std::uint64_t>, "seed is stored through a size_t field");
using ConfigField = std::variant<double*, int*, std::size_t*, bool*, std::optional<double>*,
                                 std::array<double, 3>*, std::vector<Family>*>;

// Single field list shared by the JSON writer, the reader and the
// environment overrides.
template <typename F>
void visit_config(Config& c, F&& f) {
  f("", "seed", ConfigField{&c.seed});
  f("grid", "families", ConfigField{&c.grid.families});
  f("grid", "bases_per_family", ConfigField{&c.grid.bases_per_family});
  f("grid", "scales", ConfigField{&c.grid.scales});
  f("grid", "scale_min", ConfigField{&c.grid.scale_min});
  f("grid", "scale_max", ConfigField{&c.grid.scale_max});
  f("grid", "surface_density", ConfigField{&c.grid.surface_density});
  f("grid", "min_surface_points", ConfigField{&c.grid.min_surface_points});
  f("grid", "grasps_per_object", ConfigField{&c.grid.grasps_per_object});
  f("gripper", "max_opening", ConfigField{&c.gripper.max_opening});
  f("gripper", "finger_length", ConfigField{&c.gripper.finger_length});
  f("gripper", "finger_depth", ConfigField{&c.gripper.finger_depth});
  f("gripper", "finger_thickness", ConfigField{&c.gripper.finger_thickness});
  f("gripper", "palm_depth", ConfigField{&c.gripper.palm_depth});
  f("gripper", "clearance", ConfigField{&c.gripper.clearance});
  f("gripper", "collision_margin", ConfigField{&c.gripper.collision_margin});
  f("fit", "restarts", ConfigField{&c.fit.restarts});
  f("fit", "max_iters", ConfigField{&c.fit.max_iters});
  f("fit", "residual_tol", ConfigField{&c.fit.residual_tol});
  f("fit", "eps_low", ConfigField{&c.fit.eps_low});
  f("fit", "eps_high", ConfigField{&c.fit.eps_high});
  f("fit", "huber_delta", ConfigField{&c.fit.huber_delta});
  f("fit", "max_points", ConfigField{&c.fit.max_points});
  f("fit", "axis_cap", ConfigField{&c.fit.axis_cap});
  f("fit", "support_z", ConfigField{&c.fit.support_z});
  f("fit", "silhouette_margin", ConfigField{&c.fit.silhouette_margin});
  f("matcher", "w_r", ConfigField{&c.matcher.w_r});
  f("matcher", "w_eps", ConfigField{&c.matcher.w_eps});
  f("matcher", "lambda_s", ConfigField{&c.matcher.lambda_s});
  f("matcher", "lambda_a", ConfigField{&c.matcher.lambda_a});
  f("matcher", "K1", ConfigField{&c.matcher.K1});
  f("matcher", "K2", ConfigField{&c.matcher.K2});
  f("matcher", "eps_band", ConfigField{&c.matcher.equivalence.eps_band});
  f("matcher", "axis_tol", ConfigField{&c.matcher.equivalence.axis_tol});
  f("filter", "min_closure_points", ConfigField{&c.filter.min_closure_points});
  f("filter", "max_contact_angle_deg", ConfigField{&c.filter.max_contact_angle_deg});
  f("refine", "deepen", ConfigField{&c.refine.deepen});
  f("refine", "angles_deg", ConfigField{&c.refine.angles_deg});
  f("score", "fill_points", ConfigField{&c.score.fill_points});
  f("score", "clearance_scale", ConfigField{&c.score.clearance_scale});
  f("planner", "eval_threshold", ConfigField{&c.eval_threshold});
  f("planner", "refine_threshold", ConfigField{&c.refine_threshold});
  f("planner", "complete_target", ConfigField{&c.complete_target});
  f("planner", "completion_gap", ConfigField{&c.completion_gap});
  f("planner", "support_margin", ConfigField{&c.support_margin});
  f("export", "noise_sigma", ConfigField{&c.export_.noise_sigma});
  f("export", "expanded_points", ConfigField{&c.export_.targets.expanded});
  f("export", "closure_points", ConfigField{&c.export_.targets.closure});
  f("export", "scenes", ConfigField{&c.export_.scenes});
  f("export", "samples_per_scene", ConfigField{&c.export_.samples_per_scene});
  f("benchmark", "objects", ConfigField{&c.bench_objects});
  f("benchmark", "scenes", ConfigField{&c.bench_scenes});
  f("benchmark", "attempt_cap_extra", ConfigField{&c.attempt_cap_extra});
  f("benchmark", "samples_per_object", ConfigField{&c.samples_per_object});
  f("benchmark", "fit_max_points", ConfigField{&c.bench_fit_points});
  f("benchmark", "fit_max_iters", ConfigField{&c.bench_fit_iters});
  f("oracle", "align_cos", ConfigField{&c.oracle.align_cos});
  f("oracle", "opposition_min_deg", ConfigField{&c.oracle.opposition_min_deg});
  f("oracle", "contact_band", ConfigField{&c.oracle.contact_band});
  f("oracle", "surface_density", ConfigField{&c.oracle.surface_density});
  f("oracle", "min_samples", ConfigField{&c.oracle.min_samples});
  f("render", "march_step", ConfigField{&c.render.march_step});
  f("render", "inside_tol", ConfigField{&c.render.inside_tol});
  f("render", "table_spacing", ConfigField{&c.render.table_spacing});
}

inline Json field_to_json(const ConfigField& field) {
  return std::visit(
      [](auto* p) -> Json {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, std::optional<double>>) {
          return *p ? Json(**p) : Json(nullptr);
        } else if constexpr (std::is_same_v<T, std::vector<Family>>) {
          Json a = Json::array();
          for (Family f : *p) a.push_back(to_string(f));
          return a;
        } else if constexpr (std::is_same_v<T, std::array<double, 3>>) {
          return Json::array({(*p)[0], (*p)[1], (*p)[2]});
        } else {
          return Json(*p);
        }
      },
      field);
}

inline void field_from_json(const ConfigField& field, const Json& j, const std::string& name) {
  auto bad = [&](const char* what) { throw Error(ErrorCode::config_error, "config key '" + name + "': " + what); };
  std::visit(
      [&](auto* p) {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, bool>) {
          if (!j.is_boolean()) bad("expected true or false");
          *p = j.get<bool>();
        } else if constexpr (std::is_same_v<T, double>) {
          if (!j.is_number()) bad("expected a number");
          *p = j.get<double>();
        } else if constexpr (std::is_same_v<T, int>) {
          if (!j.is_number_integer()) bad("expected an integer");
          *p = j.get<int>();
        } else if constexpr (std::is_same_v<T, std::size_t>) {
          if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
            bad("expected a non-negative integer");
          }
          *p = j.get<T>();
        } else if constexpr (std::is_same_v<T, std::optional<double>>) {
          if (j.is_null()) {
            p->reset();
          } else {
            if (!j.is_number()) bad("expected a number or null");
            *p = j.get<double>();
          }
        } else if constexpr (std::is_same_v<T, std::array<double, 3>>) {
          if (!j.is_array() || j.size() != 3) bad("expected three numbers");
          for (std::size_t k = 0; k < 3; ++k) {
            if (!j[k].is_number()) bad("expected three numbers");
            (*p)[k] = j[k].get<double>();
          }
        } else {
          if (!j.is_array()) bad("expected a list of family names");
          p->clear();
          for (const auto& f : j) {
            if (!f.is_string()) bad("expected a list of family names");
            try {
              p->push_back(family_from_string(f.get<std::string>()));
            } catch (const Error&) {
              bad("unknown family");
            }
          }
        }
      },
      field);
}

inline std::string upper(std::string s) {
  for (auto& ch : s) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return s;
}

}  // namespace detail

inline Json to_json(const Config& cfg) {
  Config c = cfg;
  Json j{{"format_version", kConfigVersion}};
  detail::visit_config(c, [&](const std::string& section, const std::string& key, const detail::ConfigField& f) {
    if (section.empty()) {
      j[key] = detail::field_to_json(f);
    } else {
      j[section][key] = detail::field_to_json(f);
    }
  });
  return j;
}

/// Applies the keys present in `j` onto `cfg`; unknown keys are errors.
inline void update_from_json(Config& cfg, const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::config_error, "config must be a JSON object");
  if (j.contains("format_version") && j.at("format_version") != kConfigVersion) {
    throw Error(ErrorCode::config_error, "unsupported config format_version");
  }
  std::size_t matched = j.contains("format_version") ? 1 : 0;
  std::map<std::string, std::size_t> section_hits;
  detail::visit_config(cfg, [&](const std::string& section, const std::string& key, const detail::ConfigField& f) {
    const Json* node = &j;
    if (!section.empty()) {
      if (!j.contains(section)) return;
      node = &j.at(section);
      if (!node->is_object()) throw Error(ErrorCode::config_error, "config section '" + section + "' must be an object");
    }
    if (!node->contains(key)) return;
    detail::field_from_json(f, node->at(key), section.empty() ? key : section + "." + key);
    if (section.empty()) {
      ++matched;
    } else {
      ++section_hits[section];
    }
  });
  std::size_t expected = 0;
  for (const auto& [k, v] : j.items()) {
    if (v.is_object()) {
      if (section_hits[k] != v.size()) throw Error(ErrorCode::config_error, "unknown key in config section '" + k + "'");
    } else {
      ++expected;
    }
  }
  if (matched != expected) throw Error(ErrorCode::config_error, "unknown top-level config key");
}

/// Overrides from the environment: SQGRASP_SEED, SQGRASP_MATCHER__K1, ...
/// Values are JSON literals (numbers, true/false, null, arrays).
inline void apply_env_overrides(Config& cfg, const std::function<const char*(const char*)>& getenv_fn = std::getenv) {
  detail::visit_config(cfg, [&](const std::string& section, const std::string& key, const detail::ConfigField& f) {
    const std::string name = std::string(kEnvPrefix) + (section.empty() ? "" : detail::upper(section) + "__") +
                             detail::upper(key);
    const char* raw = getenv_fn(name.c_str());
    if (!raw) return;
    Json value;
    try {
      value = Json::parse(raw);
    } catch (const Json::parse_error&) {
      value = std::string(raw);
    }
    detail::field_from_json(f, value, name);
  });
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open config file: " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::config_error, "config is not valid JSON: " + std::string(e.what()));
  }
  Config cfg;
  update_from_json(cfg, j);
  return cfg;
}

}  // namespace sqg
