#pragma once

// Point-cloud files: whitespace XYZ ("x y z [nx ny nz]", '#' comments) and
// the ASCII subset of PLY. Units are meters. Writers use 6 decimals.

#include <sqgrasp/sampling.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace sqg {

enum class CloudFormat { xyz, ply_ascii };

inline CloudFormat cloud_format_for(const std::string& path) {
  const auto dot = path.rfind('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return ext == "ply" ? CloudFormat::ply_ascii : CloudFormat::xyz;
}

namespace detail {

[[noreturn]] inline void cloud_error(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::parse_error, "line " + std::to_string(line) + ": " + what);
}

inline double parse_number(const std::string& tok, std::size_t line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    cloud_error(line, "not a number: '" + tok + "'");
  }
  if (used != tok.size()) cloud_error(line, "not a number: '" + tok + "'");
  if (!std::isfinite(v)) cloud_error(line, "non-finite value");
  return v;
}

inline std::vector<std::string> tokens(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string t; is >> t;) out.push_back(t);
  return out;
}

inline void add_point(PointCloud& cloud, const std::vector<double>& v, bool with_normal, std::size_t line) {
  cloud.points.emplace_back(v[0], v[1], v[2]);
  if (!with_normal) return;
  const Vec3 n(v[3], v[4], v[5]);
  if (n.norm() < 1e-12) cloud_error(line, "zero-length normal");
  cloud.normals.push_back(n.normalized());
}

inline PointCloud parse_xyz(std::istream& in) {
  PointCloud cloud;
  std::optional<bool> with_normals;
  std::string raw;
  for (std::size_t line = 1; std::getline(in, raw); ++line) {
    const auto hash = raw.find('#');
    const auto tok = tokens(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (tok.empty()) continue;
    if (tok.size() != 3 && tok.size() != 6) cloud_error(line, "expected 3 or 6 values, got " + std::to_string(tok.size()));
    const bool has_n = tok.size() == 6;
    if (with_normals && *with_normals != has_n) cloud_error(line, "normals present on some lines only");
    with_normals = has_n;
    std::vector<double> v;
    for (const auto& t : tok) v.push_back(parse_number(t, line));
    add_point(cloud, v, has_n, line);
  }
  return cloud;
}

inline PointCloud parse_ply(std::istream& in) {
  std::string raw;
  std::size_t line = 0;
  auto next = [&]() {
    if (!std::getline(in, raw)) cloud_error(line + 1, "unexpected end of file");
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    return tokens(raw);
  };
  if (next() != std::vector<std::string>{"ply"}) cloud_error(line, "missing 'ply' magic");
  std::size_t vertices = 0;
  bool in_vertex = false, seen_vertex = false, seen_other_before = false;
  std::vector<std::string> props;
  for (;;) {
    const auto t = next();
    if (t.empty() || t[0] == "comment" || t[0] == "obj_info") continue;
    if (t[0] == "format") {
      if (t.size() < 2 || t[1] != "ascii") cloud_error(line, "only ASCII PLY is supported");
    } else if (t[0] == "element") {
      if (t.size() != 3) cloud_error(line, "malformed element line");
      in_vertex = t[1] == "vertex";
      if (in_vertex) {
        if (seen_other_before) cloud_error(line, "vertex element must come first");
        seen_vertex = true;
        vertices = static_cast<std::size_t>(parse_number(t[2], line));
      } else if (!seen_vertex) {
        seen_other_before = true;
      }
    } else if (t[0] == "property") {
      if (!in_vertex) continue;
      if (t.size() != 3 || t[1] == "list") cloud_error(line, "unsupported vertex property");
      if (t[1] != "float" && t[1] != "double" && t[1] != "float32" && t[1] != "float64") {
        cloud_error(line, "vertex properties must be float or double");
      }
      props.push_back(t[2]);
    } else if (t[0] == "end_header") {
      break;
    } else {
      cloud_error(line, "unknown header keyword '" + t[0] + "'");
    }
  }
  auto find = [&](const char* name) -> int {
    const auto it = std::find(props.begin(), props.end(), name);
    return it == props.end() ? -1 : static_cast<int>(it - props.begin());
  };
  const std::array<int, 6> idx = {find("x"), find("y"), find("z"), find("nx"), find("ny"), find("nz")};
  if (idx[0] < 0 || idx[1] < 0 || idx[2] < 0) cloud_error(line, "vertex element lacks x/y/z");
  const int normal_count = (idx[3] >= 0) + (idx[4] >= 0) + (idx[5] >= 0);
  if (normal_count != 0 && normal_count != 3) cloud_error(line, "partial normal properties");
  const bool has_n = normal_count == 3;
  PointCloud cloud;
  for (std::size_t k = 0; k < vertices; ++k) {
    const auto t = next();
    if (t.size() != props.size()) {
      cloud_error(line, "expected " + std::to_string(props.size()) + " values, got " + std::to_string(t.size()));
    }
    std::vector<double> v(6, 0.0);
    for (std::size_t c = 0; c < (has_n ? 6u : 3u); ++c) v[c] = parse_number(t[static_cast<std::size_t>(idx[c])], line);
    add_point(cloud, v, has_n, line);
  }
  return cloud;
}

}  // namespace detail

inline PointCloud parse_cloud(std::istream& in, CloudFormat format) {
  return format == CloudFormat::xyz ? detail::parse_xyz(in) : detail::parse_ply(in);
}

inline PointCloud parse_cloud_text(const std::string& text, CloudFormat format) {
  std::istringstream in(text);
  return parse_cloud(in, format);
}

inline PointCloud load_cloud(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open cloud file: " + path);
  try {
    return parse_cloud(in, cloud_format_for(path));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::parse_error) throw;
    throw Error(ErrorCode::parse_error, path + ": " + e.detail());
  }
}

inline void write_cloud(std::ostream& out, const PointCloud& cloud, CloudFormat format) {
  const bool n = cloud.has_normals();
  char buf[192];
  if (format == CloudFormat::ply_ascii) {
    out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size() << "\n"
        << "property float x\nproperty float y\nproperty float z\n";
    if (n) out << "property float nx\nproperty float ny\nproperty float nz\n";
    out << "end_header\n";
  }
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    int len = std::snprintf(buf, sizeof buf, "%.6f %.6f %.6f", p.x(), p.y(), p.z());
    if (n) {
      const Vec3& q = cloud.normals[i];
      std::snprintf(buf + len, sizeof buf - static_cast<std::size_t>(len), " %.6f %.6f %.6f", q.x(), q.y(), q.z());
    }
    out << buf << '\n';
  }
}

inline std::string cloud_text(const PointCloud& cloud, CloudFormat format) {
  std::ostringstream os;
  write_cloud(os, cloud, format);
  return os.str();
}

inline void save_cloud(const std::string& path, const PointCloud& cloud) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io_error, "cannot write cloud file: " + path);
  write_cloud(out, cloud, cloud_format_for(path));
  if (!out) throw Error(ErrorCode::io_error, "write failed: " + path);
}

/// PCA normals over the k nearest neighbors, flipped toward `viewpoint`
/// when given, else away from the centroid.
inline PointCloud estimate_normals(const PointCloud& cloud, std::size_t k = 12,
                                   const std::optional<Vec3>& viewpoint = std::nullopt) {
  if (cloud.size() < 3) throw Error(ErrorCode::invalid_argument, "estimate_normals: need at least 3 points");
  Vec3 lo = cloud.points[0], hi = lo;
  for (const auto& p : cloud.points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double cell = std::max(1e-6, (hi - lo).norm() / std::cbrt(static_cast<double>(cloud.size())));
  const PointGrid grid(cloud.points, cell);
  const Vec3 c = cloud.centroid();
  PointCloud out;
  out.points = cloud.points;
  out.normals.resize(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto nb = grid.nearest(cloud.points[i], k);
    Vec3 mean = Vec3::Zero();
    for (auto j : nb) mean += cloud.points[j];
    mean /= static_cast<double>(nb.size());
    Mat3 cov = Mat3::Zero();
    for (auto j : nb) {
      const Vec3 d = cloud.points[j] - mean;
      cov += d * d.transpose();
    }
    Vec3 n = Eigen::SelfAdjointEigenSolver<Mat3>(cov).eigenvectors().col(0).normalized();
    const Vec3 ref = viewpoint ? Vec3(*viewpoint - cloud.points[i]) : Vec3(cloud.points[i] - c);
    if (n.dot(ref) < 0.0) n = -n;
    out.normals[i] = n;
  }
  return out;
}

}  // namespace sqg
