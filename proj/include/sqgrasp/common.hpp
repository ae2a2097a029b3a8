#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace sqg {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = std::numbers::pi;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

// ---------------------------------------------------------------------------
// Errors

enum class ErrorCode {
  invalid_argument,
  degenerate_normal,
  unfittable_input,
  empty_grid,
  empty_database,
  missing_normals,
  empty_region,
  zero_probability,
  placement_failure,
  parse_error,
  io_error,
  version_mismatch,
  malformed_file,
  checksum_mismatch,
  config_error,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::degenerate_normal: return "degenerate_normal";
    case ErrorCode::unfittable_input: return "unfittable_input";
    case ErrorCode::empty_grid: return "empty_grid";
    case ErrorCode::empty_database: return "empty_database";
    case ErrorCode::missing_normals: return "missing_normals";
    case ErrorCode::empty_region: return "empty_region";
    case ErrorCode::zero_probability: return "zero_probability";
    case ErrorCode::placement_failure: return "placement_failure";
    case ErrorCode::parse_error: return "parse_error";
    case ErrorCode::io_error: return "io_error";
    case ErrorCode::version_mismatch: return "version_mismatch";
    case ErrorCode::malformed_file: return "malformed_file";
    case ErrorCode::checksum_mismatch: return "checksum_mismatch";
    case ErrorCode::config_error: return "config_error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

// ---------------------------------------------------------------------------
// Rigid transforms

/// Proper rigid motion x -> R x + t.
struct RigidPose {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  static RigidPose identity() { return {}; }
  static RigidPose from_translation(const Vec3& t) { return {Mat3::Identity(), t}; }
  static RigidPose from_rotation(const Mat3& R) { return {R, Vec3::Zero()}; }

  Vec3 apply(const Vec3& p) const { return R * p + t; }
  Vec3 apply_inverse(const Vec3& p) const { return R.transpose() * (p - t); }

  RigidPose inverse() const { return {R.transpose(), -(R.transpose() * t)}; }

  /// (*this) ∘ rhs: first rhs, then *this.
  RigidPose operator*(const RigidPose& rhs) const { return {R * rhs.R, R * rhs.t + t}; }
};

inline bool is_rotation(const Mat3& R, double tol = 1e-9) {
  return (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(R.determinant() - 1.0) <= tol;
}

/// Nearest proper rotation (polar decomposition via SVD).
inline Mat3 orthonormalize(const Mat3& M) {
  Eigen::JacobiSVD<Mat3> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 U = svd.matrixU();
  Mat3 V = svd.matrixV();
  Mat3 R = U * V.transpose();
  if (R.determinant() < 0) {
    U.col(2) *= -1.0;
    R = U * V.transpose();
  }
  return R;
}

inline Mat3 rot_x(double a) { return Eigen::AngleAxisd(a, Vec3::UnitX()).toRotationMatrix(); }
inline Mat3 rot_y(double a) { return Eigen::AngleAxisd(a, Vec3::UnitY()).toRotationMatrix(); }
inline Mat3 rot_z(double a) { return Eigen::AngleAxisd(a, Vec3::UnitZ()).toRotationMatrix(); }

/// Quaternion (w, x, y, z) with w >= 0.
inline Eigen::Vector4d to_quaternion(const Mat3& R) {
  Eigen::Quaterniond q(R);
  q.normalize();
  if (q.w() < 0) q.coeffs() *= -1.0;
  return {q.w(), q.x(), q.y(), q.z()};
}

inline Mat3 from_quaternion(const Eigen::Vector4d& wxyz) {
  Eigen::Quaterniond q(wxyz[0], wxyz[1], wxyz[2], wxyz[3]);
  q.normalize();
  return q.toRotationMatrix();
}

// ---------------------------------------------------------------------------
// Point clouds

struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;  // empty, or one unit normal per point

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_normals() const { return !points.empty() && normals.size() == points.size(); }

  void push_back(const Vec3& p) { points.push_back(p); }
  void push_back(const Vec3& p, const Vec3& n) {
    points.push_back(p);
    normals.push_back(n);
  }

  /// Checks the normal-count and unit-norm invariants.
  bool valid(double tol = 1e-6) const {
    if (normals.empty()) return true;
    if (normals.size() != points.size()) return false;
    return std::all_of(normals.begin(), normals.end(),
                       [tol](const Vec3& n) { return std::abs(n.norm() - 1.0) <= tol; });
  }

  PointCloud transformed(const RigidPose& pose) const {
    PointCloud out;
    out.points.reserve(points.size());
    for (const auto& p : points) out.points.push_back(pose.apply(p));
    out.normals.reserve(normals.size());
    for (const auto& n : normals) out.normals.push_back(pose.R * n);
    return out;
  }

  PointCloud subset(const std::vector<std::size_t>& idx) const {
    PointCloud out;
    out.points.reserve(idx.size());
    for (auto i : idx) out.points.push_back(points[i]);
    if (has_normals()) {
      out.normals.reserve(idx.size());
      for (auto i : idx) out.normals.push_back(normals[i]);
    }
    return out;
  }

  void append(const PointCloud& other) {
    const bool keep_normals = (empty() || has_normals()) && other.has_normals();
    points.insert(points.end(), other.points.begin(), other.points.end());
    if (keep_normals) {
      normals.insert(normals.end(), other.normals.begin(), other.normals.end());
    } else {
      normals.clear();
    }
  }

  Vec3 centroid() const {
    Vec3 c = Vec3::Zero();
    for (const auto& p : points) c += p;
    return points.empty() ? c : Vec3(c / static_cast<double>(points.size()));
  }
};

// ---------------------------------------------------------------------------
// Randomness. Every stage draws from its own named sub-stream of one seed.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0) {
  return splitmix64(splitmix64(seed ^ fnv1a64(stream)) + index);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0) {
  return Rng(derive_seed(seed, stream, index));
}

inline double uniform(Rng& rng, double lo = 0.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Vec3 random_unit_vector(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  for (;;) {
    Vec3 v(n(rng), n(rng), n(rng));
    const double len = v.norm();
    if (len > 1e-12) return v / len;
  }
}

inline Mat3 random_rotation(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q.toRotationMatrix();
}

// ---------------------------------------------------------------------------
// Order-stable parallel map: results land at their index regardless of jobs.

template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  const std::size_t workers =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// Axis-aligned box in some local frame.
struct Box {
  Vec3 lo;
  Vec3 hi;

  bool contains(const Vec3& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
  Box inflated(double m) const { return {lo.array() - m, hi.array() + m}; }
  double distance(const Vec3& p) const {
    const Vec3 d = (lo - p).cwiseMax(p - hi).cwiseMax(0.0);
    return d.norm();
  }
};

}  // namespace sqg
