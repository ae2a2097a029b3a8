#pragma once

// Primitive database: a family x base-shape x scale grid of objects, each
// with canonical superquadric coefficients, a surface sample, and antipodal
// pre-grasps that pass the coarse filter on that sample.

#include <sqgrasp/fit.hpp>
#include <sqgrasp/grasp.hpp>
#include <sqgrasp/json_io.hpp>
#include <sqgrasp/sampling.hpp>
#include <sqgrasp/shapes.hpp>

#include <fstream>
#include <map>
#include <sstream>

namespace sqg {

inline constexpr int kDatabaseVersion = 1;
inline constexpr std::size_t kBaseShapes = 25;

struct GridSpec {
  std::vector<Family> families = {Family::cuboid, Family::cylinder, Family::elliptical_cylinder, Family::frustum};
  std::size_t bases_per_family = kBaseShapes;
  std::size_t scales = 15;
  double scale_min = 0.012;  // half-extent of the smallest base dimension
  double scale_max = 0.03;
  double surface_density = 5e4;  // points per square meter
  std::size_t min_surface_points = 500;
  std::size_t grasps_per_object = 64;

  std::size_t record_count() const { return families.size() * bases_per_family * scales; }

  /// Small grid for quick runs: 4 families x 3 bases x 2 scales.
  static GridSpec reduced() {
    GridSpec g;
    g.bases_per_family = 3;
    g.scales = 2;
    return g;
  }

  void validate() const {
    if (families.empty() || bases_per_family == 0 || scales == 0) {
      throw Error(ErrorCode::empty_grid, "grid yields no objects");
    }
    if (bases_per_family > kBaseShapes) {
      throw Error(ErrorCode::invalid_argument, "grid: at most 25 base shapes per family");
    }
    if (!(scale_min >= 0.01 && scale_max <= 0.30 && scale_max >= scale_min)) {
      throw Error(ErrorCode::invalid_argument, "grid: scales must lie within [0.01, 0.30] m");
    }
    if (!(surface_density > 0.0) || grasps_per_object == 0) {
      throw Error(ErrorCode::invalid_argument, "grid: density and grasp count must be positive");
    }
  }
};

namespace detail {

// Unit-scale base dimensions per family: smallest half-extent 1, or for
// frustums (base radius, top radius, half-height) with base radius 1.
inline std::array<Vec3, kBaseShapes> base_table(Family f) {
  std::array<Vec3, kBaseShapes> t;
  static constexpr std::array<double, 5> kA = {1.0, 1.25, 1.5, 1.8, 2.1};
  static constexpr std::array<double, 5> kB = {1.0, 1.15, 1.3, 1.5, 1.7};
  static constexpr std::array<double, 5> kEllipse = {1.2, 1.4, 1.6, 1.8, 2.0};
  static constexpr std::array<double, 5> kHeight = {0.8, 1.3, 1.9, 2.6, 3.4};
  static constexpr std::array<double, 5> kTaperDeg = {1.0, 2.0, 3.0, 4.0, 4.5};
  static constexpr std::array<double, 5> kHalfHeight = {0.5, 0.8, 1.1, 1.5, 2.0};
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      Vec3 d;
      switch (f) {
        case Family::cuboid:
        case Family::ellipsoid: d = Vec3(1.0, kA[i], kA[i] * kB[j]); break;
        case Family::cylinder: d = Vec3(1.0, 1.0, 0.6 + 0.14 * static_cast<double>(5 * i + j)); break;
        case Family::elliptical_cylinder: d = Vec3(1.0, kEllipse[i], kHeight[j]); break;
        case Family::frustum: {
          // Cup-like tapers; sides stay within 5 degrees of the axis.
          const double hh = kHalfHeight[j];
          d = Vec3(1.0, 1.0 - 2.0 * hh * std::tan(deg2rad(kTaperDeg[i])), hh);
          break;
        }
      }
      t[5 * i + j] = d;
    }
  }
  return t;
}

inline std::size_t base_index(std::size_t k, std::size_t n) {
  return n <= 1 ? 0 : (k * (kBaseShapes - 1) + (n - 1) / 2) / (n - 1);
}

inline double scale_value(const GridSpec& g, std::size_t k) {
  if (g.scales <= 1) return g.scale_min;
  return g.scale_min * std::pow(g.scale_max / g.scale_min, static_cast<double>(k) / static_cast<double>(g.scales - 1));
}

inline std::string record_id(Family f, std::size_t base, std::size_t scale) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s-%02zu-%02zu", to_string(f), base, scale);
  return buf;
}

}  // namespace detail

struct PrimitiveRecord {
  std::string id;
  Family family = Family::cuboid;
  Vec3 dims = Vec3::Zero();  // family dimensions, meters
  RigidPose shape_pose;      // family frame expressed in the record (superquadric) frame
  Superquadric sq;           // canonical, identity pose
  PointCloud surface;        // record frame, quantized to 1e-6
  std::vector<Grasp> grasps; // record frame
  // Quaternions as stored; grasps[i].R == from_quaternion(grasp_quaternions[i]).
  std::vector<Eigen::Vector4d> grasp_quaternions;

  Shape shape() const { return {family, dims}; }
};

/// Coefficient-table entry: one representation of one record. `sq.pose` is
/// the representation's pose in the record frame.
struct CoeffEntry {
  std::size_t record = 0;
  int rep = 0;
  Superquadric sq;
};

struct DatabaseIndex {
  int format_version = kDatabaseVersion;
  std::uint64_t seed = 0;
  GripperSpec gripper;
  GridSpec grid;
  std::vector<PrimitiveRecord> records;  // sorted by id
  std::vector<CoeffEntry> coeff_table;
  std::map<std::string, std::size_t> by_id;

  bool empty() const { return records.empty(); }

  void build_index(const EquivalenceConfig& eq = {}) {
    std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    by_id.clear();
    coeff_table.clear();
    for (std::size_t i = 0; i < records.size(); ++i) {
      by_id[records[i].id] = i;
      const auto reps = equivalent_parameterizations(records[i].sq, eq);
      for (std::size_t k = 0; k < reps.size(); ++k) coeff_table.push_back({i, static_cast<int>(k), reps[k]});
    }
  }

  const PrimitiveRecord& at(const std::string& id) const {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw Error(ErrorCode::invalid_argument, "no record '" + id + "'");
    return records[it->second];
  }
};

// ---------------------------------------------------------------------------
// Grasp synthesis

struct SynthesisConfig {
  double pair_angle_deg = 10.0;   // pair axis vs. both normals; normals oppose within 180 - this
  double patch_angle_deg = 25.0;  // neighbor normals must agree within this (rejects edges)
  double patch_radius = 0.004;
  int approach_steps = 8;
  int approaches_per_pair = 4;  // divides approach_steps
  double depth_slack = 0.004;
  double min_depth = 0.003;
  double axis_share = 0.5;        // at most this fraction of grasps per closing direction
  double axis_cone_deg = 30.0;
  FilterConfig filter;
};

namespace detail {

inline Vec3 any_perpendicular(const Vec3& x) {
  Eigen::Index k;
  x.cwiseAbs().minCoeff(&k);
  return x.cross(Vec3::Unit(k)).normalized();
}

}  // namespace detail

inline std::vector<Grasp> synthesize_grasps(const PointCloud& surface, const GripperSpec& gripper,
                                            std::size_t max_grasps, std::uint64_t seed,
                                            const SynthesisConfig& cfg = {}) {
  if (!surface.has_normals()) throw Error(ErrorCode::missing_normals, "synthesize_grasps: surface needs normals");
  if (max_grasps == 0) throw Error(ErrorCode::invalid_argument, "synthesize_grasps: max_grasps must be >= 1");
  if (cfg.approach_steps < 1 || cfg.approaches_per_pair < 1 || cfg.approach_steps % cfg.approaches_per_pair != 0) {
    throw Error(ErrorCode::invalid_argument, "synthesize_grasps: approaches_per_pair must divide approach_steps");
  }
  const auto& P = surface.points;
  const auto& N = surface.normals;
  const std::size_t n = P.size();
  const double cos_pair = std::cos(deg2rad(cfg.pair_angle_deg));
  const double cos_patch = std::cos(deg2rad(cfg.patch_angle_deg));
  const PointGrid grid(P, cfg.patch_radius);

  auto flat = [&](std::size_t i) {
    for (auto k : grid.within(P[i], cfg.patch_radius)) {
      if (N[k].dot(N[i]) < cos_patch) return false;
    }
    return true;
  };

  Rng rng = make_rng(seed, "synthesize_grasps");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t max_tries = std::min<std::size_t>(n, 40 * max_grasps);

  std::vector<Grasp> out;
  for (std::size_t t = 0; t < max_tries && out.size() < max_grasps; ++t) {
    const std::size_t i = order[t];
    const int start = static_cast<int>(rng() % static_cast<std::uint64_t>(2 * cfg.approach_steps));
    if (!flat(i)) continue;
    // Partner: the best-aligned opposing point along the inward normal.
    std::size_t j = n;
    double best = -1.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (N[k].dot(N[i]) > -cos_pair) continue;
      const Vec3 d = P[k] - P[i];
      const double len = d.norm();
      if (len < 1e-4) continue;
      const Vec3 axis = d / len;
      const double align = std::min(-axis.dot(N[i]), axis.dot(N[k]));
      if (align >= cos_pair && align > best) {
        best = align;
        j = k;
      }
    }
    if (j == n || !flat(j)) continue;
    const Vec3 d = P[j] - P[i];
    const double span = d.norm();
    const double w = span + 2.0 * gripper.clearance;
    if (w > gripper.max_opening) continue;
    const Vec3 x = d / span;
    const double cos_cone = std::cos(deg2rad(cfg.axis_cone_deg));
    const auto same_axis = std::count_if(out.begin(), out.end(), [&](const Grasp& g) {
      return std::abs(g.closing().dot(x)) >= cos_cone;
    });
    if (static_cast<double>(same_axis) >= cfg.axis_share * static_cast<double>(max_grasps)) continue;
    const Vec3 c = 0.5 * (P[i] + P[j]);
    // Approach directions are anchored to the record axes, so some face
    // straight along them. A pair yields evenly spread approaches from a random
    // start, alternating full insertion with the object held near the
    // fingertips.
    const Vec3 anchor = std::abs(x.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
    const Vec3 u = (anchor - anchor.dot(x) * x).normalized();
    const Vec3 v = x.cross(u);
    for (int q = 0; q < cfg.approaches_per_pair && out.size() < max_grasps; ++q) {
      const int step = (start / 2 + q * cfg.approach_steps / cfg.approaches_per_pair) % cfg.approach_steps;
      const double phi = 2.0 * kPi * step / cfg.approach_steps;
      const Vec3 z = std::cos(phi) * u + std::sin(phi) * v;
      const Vec3 y = z.cross(x);
      // How far the object reaches back toward the palm inside the hand footprint.
      double back = 0.0;
      const double hx = w / 2.0 + gripper.finger_thickness + gripper.collision_margin;
      const double hy = gripper.finger_depth / 2.0 + gripper.collision_margin;
      for (const auto& p : P) {
        const Vec3 r = p - c;
        if (std::abs(r.dot(x)) <= hx && std::abs(r.dot(y)) <= hy) back = std::max(back, -r.dot(z));
      }
      const double deep = gripper.finger_length - gripper.collision_margin - back - cfg.depth_slack;
      if (deep < cfg.min_depth) continue;
      const double depth = (start + q) % 2 == 0 ? deep : cfg.min_depth;
      Grasp g;
      g.R.col(0) = x;
      g.R.col(1) = y;
      g.R.col(2) = z;
      g.R = from_quaternion(to_quaternion(orthonormalize(g.R)));
      g.p = c + depth * g.R.col(2);
      g.w = w;
      if (filter_one(g, surface, gripper, cfg.filter) == FilterReason::kept) out.push_back(g);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Generation

namespace detail {

struct FrustumFit {
  Superquadric sq;  // unit-scale fit, pose in the frustum frame
};

inline FrustumFit fit_frustum_base(const Vec3& dims, std::uint64_t seed) {
  constexpr double kFitScale = 0.02;
  const PointCloud cloud = sample_frustum(dims * kFitScale, 2000, seed);
  FitConfig cfg;
  cfg.axis_cap = 0.6;
  Superquadric sq = canonicalize(fit_superquadric(cloud, cfg)).sq;
  sq.axes /= kFitScale;
  sq.pose.t /= kFitScale;
  return {sq};
}

inline PointCloud quantized(const PointCloud& c) {
  PointCloud out;
  for (std::size_t i = 0; i < c.size(); ++i) out.push_back(quantize6(c.points[i]), quantize6(c.normals[i]));
  return out;
}

}  // namespace detail

/// Pure function of (grid, gripper, seed). Records with no grasp are dropped;
/// their ids are appended to `dropped` when given.
inline DatabaseIndex generate_database(const GridSpec& grid, const GripperSpec& gripper, std::uint64_t seed,
                                       int jobs = 1, std::vector<std::string>* dropped = nullptr) {
  grid.validate();
  gripper.validate();

  struct Slot {
    Family family;
    std::size_t base;
    std::size_t scale;
  };
  std::vector<Slot> slots;
  for (Family f : grid.families) {
    for (std::size_t b = 0; b < grid.bases_per_family; ++b) {
      for (std::size_t s = 0; s < grid.scales; ++s) slots.push_back({f, detail::base_index(b, grid.bases_per_family), s});
    }
  }
  // One fit per frustum base; scaling the cone scales the fit.
  std::map<std::size_t, detail::FrustumFit> frustum_fits;
  std::vector<std::size_t> frustum_bases;
  for (const auto& sl : slots) {
    if (sl.family == Family::frustum && !frustum_fits.count(sl.base)) {
      frustum_fits[sl.base] = {};
      frustum_bases.push_back(sl.base);
    }
  }
  std::vector<detail::FrustumFit> fitted(frustum_bases.size());
  parallel_for(frustum_bases.size(), jobs, [&](std::size_t k) {
    const std::size_t b = frustum_bases[k];
    fitted[k] = detail::fit_frustum_base(detail::base_table(Family::frustum)[b], derive_seed(seed, "frustum_fit", b));
  });
  for (std::size_t k = 0; k < frustum_bases.size(); ++k) frustum_fits[frustum_bases[k]] = fitted[k];

  std::vector<std::optional<PrimitiveRecord>> built(slots.size());
  parallel_for(slots.size(), jobs, [&](std::size_t k) {
    const Slot& sl = slots[k];
    const double scale = detail::scale_value(grid, sl.scale);
    PrimitiveRecord rec;
    rec.id = detail::record_id(sl.family, sl.base, sl.scale);
    rec.family = sl.family;
    rec.dims = detail::base_table(sl.family)[sl.base] * scale;
    const Shape shape = rec.shape();
    if (is_superquadric_family(sl.family)) {
      rec.sq = shape_superquadric(shape);
    } else {
      const Superquadric& unit = frustum_fits.at(sl.base).sq;
      rec.sq.axes = unit.axes * scale;
      rec.sq.eps1 = unit.eps1;
      rec.sq.eps2 = unit.eps2;
      rec.shape_pose = RigidPose{unit.pose.R, unit.pose.t * scale}.inverse();
    }
    const auto count = std::max(grid.min_surface_points,
                                static_cast<std::size_t>(std::ceil(grid.surface_density * surface_area(shape))));
    const std::uint64_t rec_seed = derive_seed(seed, rec.id);
    rec.surface = detail::quantized(sample_shape(shape, count, rec_seed).transformed(rec.shape_pose));
    rec.grasps = synthesize_grasps(rec.surface, gripper, grid.grasps_per_object, rec_seed);
    // A matrix does not always survive a quaternion round trip bit for bit,
    // so the quaternion is kept and the matrix rebuilt from it.
    for (auto& g : rec.grasps) {
      rec.grasp_quaternions.push_back(to_quaternion(g.R));
      g.R = from_quaternion(rec.grasp_quaternions.back());
    }
    if (!rec.grasps.empty()) built[k] = std::move(rec);
  });

  DatabaseIndex db;
  db.seed = seed;
  db.gripper = gripper;
  db.grid = grid;
  for (std::size_t k = 0; k < slots.size(); ++k) {
    if (built[k]) {
      db.records.push_back(std::move(*built[k]));
    } else if (dropped) {
      dropped->push_back(detail::record_id(slots[k].family, slots[k].base, slots[k].scale));
    }
  }
  db.build_index();
  return db;
}

// ---------------------------------------------------------------------------
// Serialization

inline Json to_json(const GridSpec& g) {
  Json fams = Json::array();
  for (Family f : g.families) fams.push_back(to_string(f));
  return Json{{"families", fams},
              {"bases_per_family", g.bases_per_family},
              {"scales", g.scales},
              {"scale_min", g.scale_min},
              {"scale_max", g.scale_max},
              {"surface_density", g.surface_density},
              {"min_surface_points", g.min_surface_points},
              {"grasps_per_object", g.grasps_per_object}};
}

inline void update_from_json(GridSpec& g, const Json& j) {
  if (j.contains("families")) {
    g.families.clear();
    for (const auto& f : j.at("families")) g.families.push_back(family_from_string(f.get<std::string>()));
  }
  if (j.contains("bases_per_family")) g.bases_per_family = j.at("bases_per_family").get<std::size_t>();
  if (j.contains("scales")) g.scales = j.at("scales").get<std::size_t>();
  if (j.contains("scale_min")) g.scale_min = j.at("scale_min").get<double>();
  if (j.contains("scale_max")) g.scale_max = j.at("scale_max").get<double>();
  if (j.contains("surface_density")) g.surface_density = j.at("surface_density").get<double>();
  if (j.contains("min_surface_points")) g.min_surface_points = j.at("min_surface_points").get<std::size_t>();
  if (j.contains("grasps_per_object")) g.grasps_per_object = j.at("grasps_per_object").get<std::size_t>();
}

namespace detail {

inline void append_numbers(std::string& out, const std::vector<Vec3>& v) {
  out += '[';
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      if (i || k) out += ',';
      out += format_fixed6(v[i][k]);
    }
  }
  out += ']';
}

inline std::string exact_json(const Json& j) {
  // Json::dump already prints doubles in shortest round-trip form.
  return j.dump();
}

inline std::string record_text(const PrimitiveRecord& r) {
  std::string s = "{\"id\":" + Json(r.id).dump() + ",\"family\":\"" + to_string(r.family) + "\"";
  s += ",\"dims\":" + exact_json(to_json(r.dims));
  s += ",\"shape_pose\":" + exact_json(to_json(r.shape_pose));
  s += ",\"sq\":" + exact_json(Json{{"axes", to_json(r.sq.axes)}, {"eps1", r.sq.eps1}, {"eps2", r.sq.eps2}});
  s += ",\"surface\":{\"points\":";
  append_numbers(s, r.surface.points);
  s += ",\"normals\":";
  append_numbers(s, r.surface.normals);
  s += "},\"grasps\":[";
  for (std::size_t i = 0; i < r.grasps.size(); ++i) {
    if (i) s += ',';
    const Grasp& g = r.grasps[i];
    const bool stored = r.grasp_quaternions.size() == r.grasps.size() && from_quaternion(r.grasp_quaternions[i]) == g.R;
    const Eigen::Vector4d q = stored ? r.grasp_quaternions[i] : to_quaternion(g.R);
    s += exact_json(Json{{"p", to_json(g.p)}, {"q", to_json(q)}, {"w", g.w}});
  }
  s += "]}";
  return s;
}

inline std::string records_text(const std::vector<PrimitiveRecord>& records) {
  std::string s = "[\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    s += record_text(records[i]);
    s += i + 1 < records.size() ? ",\n" : "\n";
  }
  s += "]";
  return s;
}

inline std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::vector<Vec3> vectors_from_flat(const Json& j) {
  if (!j.is_array() || j.size() % 3 != 0) throw Error(ErrorCode::malformed_file, "flat array length not a multiple of 3");
  std::vector<Vec3> out(j.size() / 3);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = Vec3(j[3 * i].get<double>(), j[3 * i + 1].get<double>(), j[3 * i + 2].get<double>());
  }
  return out;
}

inline PrimitiveRecord record_from_json(const Json& j) {
  PrimitiveRecord r;
  r.id = j.at("id").get<std::string>();
  r.family = family_from_string(j.at("family").get<std::string>());
  r.dims = vec3_from_json(j.at("dims"));
  r.shape_pose = pose_from_json(j.at("shape_pose"));
  r.sq = superquadric_from_json(j.at("sq"));
  r.surface.points = vectors_from_flat(j.at("surface").at("points"));
  r.surface.normals = vectors_from_flat(j.at("surface").at("normals"));
  if (r.surface.normals.size() != r.surface.points.size()) {
    throw Error(ErrorCode::malformed_file, "record '" + r.id + "': normal count differs from point count");
  }
  for (const auto& g : j.at("grasps")) {
    Grasp gr;
    gr.p = vec3_from_json(g.at("p"));
    r.grasp_quaternions.push_back(quat_from_json(g.at("q")));
    gr.R = from_quaternion(r.grasp_quaternions.back());
    gr.w = g.at("w").get<double>();
    r.grasps.push_back(gr);
  }
  return r;
}

}  // namespace detail

/// The serialized database document. Records come last; the header checksum
/// is FNV-1a over the records text.
inline std::string database_text(const DatabaseIndex& db) {
  const std::string records = detail::records_text(db.records);
  Json header{{"format_version", db.format_version},
              {"seed", db.seed},
              {"gripper", to_json(db.gripper)},
              {"grid", to_json(db.grid)},
              {"record_count", db.records.size()},
              {"checksum", detail::hex64(fnv1a64(records))}};
  std::string s = header.dump();
  s.pop_back();  // reopen the header object to append the records
  s += ",\"records\":" + records + "}\n";
  return s;
}

inline void save_database(const DatabaseIndex& db, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot write '" + path + "'");
  out << database_text(db);
  if (!out) throw Error(ErrorCode::io_error, "write failed for '" + path + "'");
}

inline DatabaseIndex parse_database(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::malformed_file, std::string("database is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("format_version")) {
    throw Error(ErrorCode::malformed_file, "database header lacks format_version");
  }
  if (!doc.at("format_version").is_number_integer() || doc.at("format_version").get<int>() != kDatabaseVersion) {
    throw Error(ErrorCode::version_mismatch, "unsupported database format_version " + doc.at("format_version").dump());
  }
  DatabaseIndex db;
  try {
    db.seed = doc.at("seed").get<std::uint64_t>();
    update_from_json(db.gripper, doc.at("gripper"));
    update_from_json(db.grid, doc.at("grid"));
    for (const auto& r : doc.at("records")) db.records.push_back(detail::record_from_json(r));
    if (doc.at("record_count").get<std::size_t>() != db.records.size()) {
      throw Error(ErrorCode::malformed_file, "record_count does not match the records present");
    }
    // The checksum covers the records text exactly as written.
    const std::string expected = doc.at("checksum").get<std::string>();
    const std::string marker = ",\"records\":";
    const auto start = text.find(marker);
    const auto stop = text.rfind('}');
    if (start == std::string::npos || stop == std::string::npos || stop < start + marker.size() ||
        detail::hex64(fnv1a64(std::string_view(text).substr(start + marker.size(), stop - start - marker.size()))) !=
            expected) {
      throw Error(ErrorCode::checksum_mismatch, "database checksum does not match its records");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::malformed_file, std::string("database field error: ") + e.what());
  }
  db.build_index();
  return db;
}

inline DatabaseIndex load_database(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_database(ss.str());
}

}  // namespace sqg
