// sqgrasp: command-line front end for database building, fitting, matching,
// grasp planning, scene simulation, sample export and benchmarking.

#include <sqgrasp/cloud_io.hpp>
#include <sqgrasp/reports.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace {

using namespace sqg;

enum Exit : int { ok = 0, usage = 2, io = 3, config = 4, parse = 5, db_format = 6, unfittable = 7, other = 8 };

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::io_error: return io;
    case ErrorCode::config_error: return config;
    case ErrorCode::parse_error: return parse;
    case ErrorCode::version_mismatch:
    case ErrorCode::malformed_file:
    case ErrorCode::checksum_mismatch: return db_format;
    case ErrorCode::unfittable_input: return unfittable;
    default: return other;
  }
}

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "JSON config file");
  sub->add_option("--seed", c.seed, "master seed (overrides the config)");
  sub->add_option("--jobs", c.jobs, "worker threads; never changes outputs")->check(CLI::PositiveNumber);
}

Config resolve(const Common& c) {
  Config cfg = c.config_path.empty() ? Config{} : load_config(c.config_path);
  apply_env_overrides(cfg);
  if (c.seed) cfg.seed = *c.seed;
  cfg.validate();
  return cfg;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorCode::io_error, "write failed: " + path);
}

void make_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create directory '" + dir + "': " + ec.message());
}

std::string joined(const std::string& dir, const std::string& name) { return (std::filesystem::path(dir) / name).string(); }

std::optional<Vec3> parse_vec(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  return Vec3(v[0], v[1], v[2]);
}

PointCloud with_normals(PointCloud cloud, const std::optional<Vec3>& view) {
  if (cloud.empty()) throw Error(ErrorCode::unfittable_input, "cloud is empty");
  return cloud.has_normals() ? cloud : estimate_normals(cloud, 12, view);
}

std::string mask_text(const RenderResult& view) {
  std::string out = "# object index per cloud point, -1 is the table\n";
  for (int id : view.object_ids) out += std::to_string(id) + "\n";
  return out;
}

struct Args {
  Common common;
  std::string out, out_dir, cloud, db, context, log, kind = "gallery";
  std::vector<double> view;
  bool table = false;
  std::optional<std::size_t> bases, scales, objects, scenes;
};

int run_build_db(const Args& a) {
  Config cfg = resolve(a.common);
  if (a.bases) cfg.grid.bases_per_family = *a.bases;
  if (a.scales) cfg.grid.scales = *a.scales;
  std::vector<std::string> dropped;
  const DatabaseIndex db = generate_database(cfg.grid, cfg.gripper, cfg.seed, a.common.jobs, &dropped);
  write_text(a.out, database_text(db));
  std::cerr << "records " << db.records.size() << " dropped " << dropped.size() << "\n";
  for (const auto& id : dropped) std::cerr << "  dropped " << id << "\n";
  return ok;
}

int run_fit(const Args& a) {
  const Config cfg = resolve(a.common);
  FitConfig fc = cfg.fit;
  const auto view = parse_vec(a.view);
  const PointCloud cloud = load_cloud(a.cloud);
  if (view) fc.view_direction = (cloud.centroid() - *view).normalized();
  if (a.table) fc.support_z = 0.0;
  const FitResult fit = canonicalize(fit_superquadric(cloud, fc));
  write_text(a.out, to_json(fit).dump(2) + "\n");
  return ok;
}

int run_match(const Args& a) {
  const Config cfg = resolve(a.common);
  const DatabaseIndex db = load_database(a.db);
  FitConfig fc = cfg.fit;
  const auto view = parse_vec(a.view);
  const PointCloud cloud = load_cloud(a.cloud);
  if (view) fc.view_direction = (cloud.centroid() - *view).normalized();
  if (a.table) fc.support_z = 0.0;
  const FitResult fit = canonicalize(fit_superquadric(cloud, fc));
  Json j = matches_json(retrieve(fit, db, cfg.matcher, a.common.jobs));
  j["fit"] = to_json(fit.sq);
  write_text(a.out, j.dump(2) + "\n");
  return ok;
}

int run_grasps(const Args& a) {
  const Config cfg = resolve(a.common);
  const DatabaseIndex db = load_database(a.db);
  const auto view = parse_vec(a.view);
  const PointCloud target = with_normals(load_cloud(a.cloud), view);
  std::vector<Vec3> context;
  if (!a.context.empty()) context = load_cloud(a.context).points;
  PlannerConfig pc = a.table ? cfg.tabletop() : cfg.planner();
  if (view) pc.fit.view_direction = (target.centroid() - *view).normalized();
  const PlanResult plan = plan_grasps(target, context, db, pc, derive_seed(cfg.seed, "grasps"), a.common.jobs);
  write_text(a.out, to_json(plan).dump(2) + "\n");
  return ok;
}

int run_simulate(const Args& a) {
  const Config cfg = resolve(a.common);
  const DatabaseIndex db = load_database(a.db);
  const std::size_t n = a.objects.value_or(cfg.bench_objects);
  const SceneSpec scene = make_scene(n, db, derive_seed(cfg.seed, "simulate"));
  const RenderResult view = render_single_view(scene, cfg.samples_per_object, derive_seed(cfg.seed, "render"), cfg.render);
  make_dir(a.out_dir);
  write_text(joined(a.out_dir, "scene.json"), to_json(scene).dump(2) + "\n");
  write_text(joined(a.out_dir, "cloud.xyz"), cloud_text(view.cloud, CloudFormat::xyz));
  write_text(joined(a.out_dir, "mask.txt"), mask_text(view));
  const auto tidx = view.indices_of(scene.target_index);
  write_text(joined(a.out_dir, "target.xyz"), cloud_text(view.cloud.subset(tidx), CloudFormat::xyz));
  return ok;
}

int run_export(const Args& a) {
  const Config cfg = resolve(a.common);
  const DatabaseIndex db = load_database(a.db);
  const BenchmarkConfig bc = cfg.benchmark();
  const std::size_t n_scenes = a.scenes.value_or(cfg.export_.scenes);
  const std::size_t n_objects = a.objects.value_or(cfg.bench_objects);
  std::vector<std::vector<TrainingSample>> per_scene(n_scenes);
  parallel_for(n_scenes, a.common.jobs, [&](std::size_t s) {
    const std::uint64_t seed = derive_seed(cfg.seed, "export_scene", s);
    const SceneSpec scene = make_scene(n_objects, db, seed);
    const RenderResult view = render_single_view(scene, bc.samples_per_object, seed, bc.render);
    const PointCloud target = view.cloud.subset(view.indices_of(scene.target_index));
    if (target.size() < 20) return;
    std::vector<Vec3> context;
    for (std::size_t i = 0; i < view.cloud.size(); ++i) {
      const int id = view.object_ids[i];
      if (id != scene.target_index && id != kTableId) context.push_back(view.cloud.points[i]);
    }
    PlannerConfig pc = bc.planner;
    pc.fit.view_direction = (target.centroid() - scene.camera.position()).normalized();
    PlanResult plan;
    try {
      plan = plan_grasps(target, context, db, pc, seed);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::unfittable_input) throw;
      return;
    }
    const OracleSurfaces surf = oracle_surfaces(scene, seed, bc.oracle);
    for (std::size_t k = 0; k < plan.kept.size() && per_scene[s].size() < cfg.export_.samples_per_scene; ++k) {
      TrainingSample ts;
      try {
        ts = export_sample(view.cloud, plan.kept[k], cfg.gripper, cfg.export_.noise_sigma, cfg.export_.targets,
                           derive_seed(seed, "sample", k), cfg.refine);
      } catch (const Error& e) {
        // kept on completion points alone; nothing observed to export
        if (e.code() != ErrorCode::empty_region) throw;
        continue;
      }
      const Labels labels = label_oracle(scene, surf, plan.kept[k], cfg.gripper, bc.oracle, cfg.refine);
      ts.eval_label = labels.eval_label;
      ts.refine_labels = labels.refine_labels;
      ts.provenance = scene.objects[static_cast<std::size_t>(scene.target_index)].record_id + "/" +
                      plan.kept[k].provenance.source_id + "#" + std::to_string(k);
      per_scene[s].push_back(std::move(ts));
    }
  });
  make_dir(a.out_dir);
  std::size_t total = 0;
  char name[64];
  for (std::size_t s = 0; s < n_scenes; ++s) {
    for (std::size_t k = 0; k < per_scene[s].size(); ++k) {
      std::snprintf(name, sizeof name, "sample_%03zu_%03zu.json", s, k);
      write_text(joined(a.out_dir, name), to_json(per_scene[s][k]).dump() + "\n");
      ++total;
    }
  }
  std::cerr << "samples " << total << "\n";
  return ok;
}

int run_bench(const Args& a) {
  const Config cfg = resolve(a.common);
  const DatabaseIndex db = load_database(a.db);
  BenchmarkConfig bc = cfg.benchmark();
  if (a.objects) bc.num_objects = *a.objects;
  if (a.scenes) bc.num_scenes = *a.scenes;
  const BenchmarkLog log = run_benchmark(db, bc, cfg.seed, a.common.jobs);
  if (!a.log.empty()) write_text(a.log, attempt_log_jsonl(log));
  write_text(a.out, metrics_report(log).dump(2) + "\n");
  if (!log.scenes.empty()) {
    const AttemptLog al = to_attempt_log(log);
    std::cerr << metrics_table({{"aggregate", compute_metrics(al, MetricsMode::aggregate)},
                                {"per-scene mean", compute_metrics(al, MetricsMode::per_scene_mean)}});
  }
  return ok;
}

int run_plot(const Args& a) {
  const Config cfg = resolve(a.common);
  if (a.kind == "gallery") {
    write_text(a.out, gallery_csv({0.1, 0.5, 1.0, 1.5, 1.9}, 400, cfg.seed));
    return ok;
  }
  const DatabaseIndex db = load_database(a.db);
  const BenchmarkConfig bc = cfg.benchmark();
  const std::size_t n = a.scenes.value_or(3);
  std::vector<std::optional<PlanResult>> plans(n);
  parallel_for(n, a.common.jobs, [&](std::size_t s) {
    const std::uint64_t seed = derive_seed(cfg.seed, "scene", s);
    const SceneSpec scene = make_scene(a.objects.value_or(bc.num_objects), db, seed);
    const RenderResult view = render_single_view(scene, bc.samples_per_object, seed, bc.render);
    const PointCloud target = view.cloud.subset(view.indices_of(scene.target_index));
    if (target.size() < 20) return;
    std::vector<Vec3> context;
    for (std::size_t i = 0; i < view.cloud.size(); ++i) {
      const int id = view.object_ids[i];
      if (id != scene.target_index && id != kTableId) context.push_back(view.cloud.points[i]);
    }
    PlannerConfig pc = bc.planner;
    pc.fit.view_direction = (target.centroid() - scene.camera.position()).normalized();
    try {
      plans[s] = plan_grasps(target, context, db, pc, seed);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::unfittable_input) throw;
    }
  });
  std::vector<std::pair<std::size_t, PlanResult>> done;
  for (std::size_t s = 0; s < n; ++s) {
    if (plans[s]) done.emplace_back(s, *plans[s]);
  }
  write_text(a.out, score_csv(done));
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Superquadric-matched grasp generation"};
  app.require_subcommand(1);
  Args a;
  std::map<CLI::App*, int (*)(const Args&)> handlers;

  auto sub = [&](const char* name, const char* help, int (*fn)(const Args&)) {
    CLI::App* s = app.add_subcommand(name, help);
    add_common(s, a.common);
    handlers[s] = fn;
    return s;
  };

  auto* build = sub("build-db", "generate the primitive database", run_build_db);
  build->add_option("--out,-o", a.out, "database file (default stdout)");
  build->add_option("--bases", a.bases, "base shapes per family");
  build->add_option("--scales", a.scales, "scales per base shape");

  for (auto [name, help, fn] : {std::tuple{"fit", "fit a superquadric to a cloud", run_fit},
                                std::tuple{"match", "retrieve database matches for a cloud", run_match}}) {
    auto* s = sub(name, help, fn);
    s->add_option("--cloud", a.cloud, "input cloud (.xyz or .ply)")->required();
    s->add_option("--out,-o", a.out, "output JSON (default stdout)");
    s->add_option("--view", a.view, "camera position x y z for single-view clouds")->expected(3);
    s->add_flag("--table", a.table, "the support plane z = 0 is known");
    if (std::string(name) == "match") s->add_option("--db", a.db, "database file")->required();
  }

  auto* grasps = sub("grasps", "plan grasps for a target cloud", run_grasps);
  grasps->add_option("--cloud", a.cloud, "target cloud (.xyz or .ply)")->required();
  grasps->add_option("--db", a.db, "database file")->required();
  grasps->add_option("--context", a.context, "cloud of surrounding obstacles");
  grasps->add_option("--view", a.view, "camera position x y z")->expected(3);
  grasps->add_flag("--table", a.table, "the support plane z = 0 is known");
  grasps->add_option("--out,-o", a.out, "output JSON (default stdout)");

  auto* exp = sub("export-samples", "write labelled training samples", run_export);
  exp->add_option("--db", a.db, "database file")->required();
  exp->add_option("--out-dir", a.out_dir, "output directory")->required();
  exp->add_option("--scenes", a.scenes, "number of scenes");
  exp->add_option("--objects", a.objects, "objects per scene");

  auto* sim = sub("simulate", "render a random tabletop scene", run_simulate);
  sim->add_option("--db", a.db, "database file")->required();
  sim->add_option("--out-dir", a.out_dir, "output directory")->required();
  sim->add_option("--objects", a.objects, "objects in the scene");

  auto* bench = sub("bench", "run the decluttering benchmark", run_bench);
  bench->add_option("--db", a.db, "database file")->required();
  bench->add_option("--objects", a.objects, "objects per scene");
  bench->add_option("--scenes", a.scenes, "number of scenes");
  bench->add_option("--log", a.log, "attempt log (JSON lines)");
  bench->add_option("--out,-o", a.out, "metrics report JSON (default stdout)");

  auto* plot = sub("plot-data", "emit CSV for plotting", run_plot);
  plot->add_option("--kind", a.kind, "gallery or scores")->check(CLI::IsMember({"gallery", "scores"}));
  plot->add_option("--db", a.db, "database file (scores)");
  plot->add_option("--scenes", a.scenes, "scenes to plan (scores)");
  plot->add_option("--objects", a.objects, "objects per scene (scores)");
  plot->add_option("--out,-o", a.out, "output CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? ok : usage;
  }
  if (plot->parsed() && a.kind == "scores" && a.db.empty()) {
    std::cerr << "plot-data --kind scores needs --db\n";
    return usage;
  }
  try {
    for (auto& [s, fn] : handlers) {
      if (s->parsed()) return fn(a);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return other;
  }
  return usage;
}
