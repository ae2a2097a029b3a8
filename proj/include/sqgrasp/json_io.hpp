#pragma once

// JSON conversions for the shared value types, plus number formatting used
// by the hand-written writers.

#include <sqgrasp/grasp.hpp>
#include <sqgrasp/superquadric.hpp>

#include <json.hpp>

#include <cstdio>

namespace sqg {

using Json = nlohmann::ordered_json;

/// Shortest text that parses back to exactly `x`.
inline std::string format_exact(double x) {
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

inline std::string format_fixed6(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

/// Rounds to the nearest multiple of 1e-6, the precision of stored samples.
inline double quantize6(double x) { return std::round(x * 1e6) / 1e6; }

inline Vec3 quantize6(const Vec3& v) { return {quantize6(v.x()), quantize6(v.y()), quantize6(v.z())}; }

inline Json to_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

inline Vec3 vec3_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::malformed_file, "expected a 3-vector");
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

inline Json to_json(const Eigen::Vector4d& q) { return Json::array({q[0], q[1], q[2], q[3]}); }

inline Eigen::Vector4d quat_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 4) throw Error(ErrorCode::malformed_file, "expected a quaternion (w,x,y,z)");
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>(), j.at(3).get<double>()};
}

inline Json to_json(const RigidPose& p) {
  return Json{{"t", to_json(p.t)}, {"q", to_json(to_quaternion(p.R))}};
}

inline RigidPose pose_from_json(const Json& j) {
  return {from_quaternion(quat_from_json(j.at("q"))), vec3_from_json(j.at("t"))};
}

inline Json to_json(const GripperSpec& g) {
  return Json{{"max_opening", g.max_opening},   {"finger_length", g.finger_length},
              {"finger_depth", g.finger_depth}, {"finger_thickness", g.finger_thickness},
              {"palm_depth", g.palm_depth},     {"clearance", g.clearance},
              {"collision_margin", g.collision_margin}};
}

inline void update_from_json(GripperSpec& g, const Json& j) {
  if (j.contains("max_opening")) g.max_opening = j.at("max_opening").get<double>();
  if (j.contains("finger_length")) g.finger_length = j.at("finger_length").get<double>();
  if (j.contains("finger_depth")) g.finger_depth = j.at("finger_depth").get<double>();
  if (j.contains("finger_thickness")) g.finger_thickness = j.at("finger_thickness").get<double>();
  if (j.contains("palm_depth")) g.palm_depth = j.at("palm_depth").get<double>();
  if (j.contains("clearance")) g.clearance = j.at("clearance").get<double>();
  if (j.contains("collision_margin")) g.collision_margin = j.at("collision_margin").get<double>();
}

inline Json to_json(const Superquadric& sq) {
  return Json{{"axes", to_json(sq.axes)}, {"eps1", sq.eps1}, {"eps2", sq.eps2}, {"pose", to_json(sq.pose)}};
}

inline Superquadric superquadric_from_json(const Json& j) {
  Superquadric sq;
  sq.axes = vec3_from_json(j.at("axes"));
  sq.eps1 = j.at("eps1").get<double>();
  sq.eps2 = j.at("eps2").get<double>();
  if (j.contains("pose")) sq.pose = pose_from_json(j.at("pose"));
  return sq;
}

inline const char* refinement_tag(int k) {
  switch (k) {
    case 0: return "-15";
    case 1: return "0";
    case 2: return "+15";
    default: return "none";
  }
}

inline Json to_json(const Grasp& g) {
  Json j{{"p", to_json(g.p)}, {"q", to_json(to_quaternion(g.R))}, {"w", g.w}};
  if (g.score) j["score"] = *g.score;
  if (!g.provenance.source_id.empty() || g.provenance.rank >= 0 || g.provenance.refinement >= 0) {
    j["provenance"] = Json{{"source_id", g.provenance.source_id},
                           {"rank", g.provenance.rank},
                           {"refinement", refinement_tag(g.provenance.refinement)}};
  }
  return j;
}

inline Grasp grasp_from_json(const Json& j) {
  Grasp g;
  g.p = vec3_from_json(j.at("p"));
  g.R = from_quaternion(quat_from_json(j.at("q")));
  g.w = j.at("w").get<double>();
  if (j.contains("score")) g.score = j.at("score").get<double>();
  if (j.contains("provenance")) {
    const auto& p = j.at("provenance");
    g.provenance.source_id = p.at("source_id").get<std::string>();
    g.provenance.rank = p.at("rank").get<int>();
    const auto tag = p.at("refinement").get<std::string>();
    g.provenance.refinement = tag == "-15" ? 0 : tag == "0" ? 1 : tag == "+15" ? 2 : -1;
  }
  return g;
}

}  // namespace sqg
