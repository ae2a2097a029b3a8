#pragma once

// Superquadric representation: inside-outside function, surface sampling,
// outward normals and equivalent re-parameterizations.

#include <sqgrasp/common.hpp>

#include <numeric>

namespace sqg {

inline constexpr double kMinExponent = 0.05;
inline constexpr double kMaxExponent = 2.0;

/// Superquadric with semi-axes `axes`, shape exponents (eps1, eps2) and the
/// pose of its local frame in the world.
struct Superquadric {
  Vec3 axes = Vec3::Ones();
  double eps1 = 1.0;
  double eps2 = 1.0;
  RigidPose pose;

  double ax() const { return axes.x(); }
  double ay() const { return axes.y(); }
  double az() const { return axes.z(); }

  bool valid() const {
    return (axes.array() > 0.0).all() && axes.allFinite() && eps1 > 0.0 && eps1 <= kMaxExponent &&
           eps2 > 0.0 && eps2 <= kMaxExponent && is_rotation(pose.R);
  }

  /// Coefficient vector (a_x, a_y, a_z, eps1, eps2).
  Eigen::Matrix<double, 5, 1> coefficients() const {
    Eigen::Matrix<double, 5, 1> c;
    c << axes, eps1, eps2;
    return c;
  }
};

inline double clamp_exponent(double e) { return std::clamp(e, kMinExponent, kMaxExponent); }

/// sign(u) * |u|^e with sign(0) = 0.
inline double signed_pow(double u, double e) {
  if (u == 0.0) return 0.0;
  return std::copysign(std::pow(std::abs(u), e), u);
}

namespace detail {

// Left-hand side of the implicit equation for a point in the local frame.
inline double implicit_local(const Vec3& axes, double e1, double e2, const Vec3& p) {
  e1 = clamp_exponent(e1);
  e2 = clamp_exponent(e2);
  const double fx = std::pow(std::abs(p.x() / axes.x()), 2.0 / e2);
  const double fy = std::pow(std::abs(p.y() / axes.y()), 2.0 / e2);
  const double fz = std::pow(std::abs(p.z() / axes.z()), 2.0 / e1);
  return std::pow(fx + fy, e2 / e1) + fz;
}

inline Vec3 gradient_local(const Vec3& axes, double e1, double e2, const Vec3& p) {
  e1 = clamp_exponent(e1);
  e2 = clamp_exponent(e2);
  const Vec3 u = p.cwiseQuotient(axes);
  const double fx = std::pow(std::abs(u.x()), 2.0 / e2);
  const double fy = std::pow(std::abs(u.y()), 2.0 / e2);
  const double g = fx + fy;
  Vec3 grad = Vec3::Zero();
  if (g > 0.0) {
    const double outer = (e2 / e1) * std::pow(g, e2 / e1 - 1.0);
    grad.x() = outer * (2.0 / e2) * signed_pow(u.x(), 2.0 / e2 - 1.0) / axes.x();
    grad.y() = outer * (2.0 / e2) * signed_pow(u.y(), 2.0 / e2 - 1.0) / axes.y();
  }
  grad.z() = (2.0 / e1) * signed_pow(u.z(), 2.0 / e1 - 1.0) / axes.z();
  return grad;
}

}  // namespace detail

/// Inside-outside value: < 1 inside, 1 on the surface, > 1 outside, 0 at the center.
inline double implicit_value(const Superquadric& sq, const Vec3& p_world) {
  return detail::implicit_local(sq.axes, sq.eps1, sq.eps2, sq.pose.apply_inverse(p_world));
}

/// World-frame gradient of the inside-outside function.
inline Vec3 implicit_gradient(const Superquadric& sq, const Vec3& p_world) {
  return sq.pose.R * detail::gradient_local(sq.axes, sq.eps1, sq.eps2, sq.pose.apply_inverse(p_world));
}

/// Outward unit normal at a surface point.
inline Vec3 normal_at(const Superquadric& sq, const Vec3& p_surface) {
  const double f = implicit_value(sq, p_surface);
  if (!(std::abs(f - 1.0) <= 1e-3)) {
    throw Error(ErrorCode::invalid_argument, "normal_at: point is not on the surface");
  }
  const Vec3 g = implicit_gradient(sq, p_surface);
  const double len = g.norm();
  if (!(len >= 1e-12) || !std::isfinite(len)) {
    throw Error(ErrorCode::degenerate_normal, "normal_at: gradient vanishes");
  }
  return g / len;
}

/// Samples `count` surface points with outward normals. Directions are drawn
/// uniformly on the sphere of the unit-axis shape, pushed radially onto the
/// surface, and selected with area-proportional weights so the result is
/// close to uniform in surface area.
inline PointCloud sample_surface(const Superquadric& sq, std::size_t count, std::uint64_t seed) {
  if (count == 0) throw Error(ErrorCode::invalid_argument, "sample_surface: count must be >= 1");
  const double e1 = clamp_exponent(sq.eps1);
  const double e2 = clamp_exponent(sq.eps2);
  const Vec3 unit = Vec3::Ones();

  Rng rng = make_rng(seed, "sample_surface");
  const std::size_t pool = std::max<std::size_t>(64, 6 * count);
  struct Candidate {
    Vec3 local;
    double key;
  };
  std::vector<Candidate> cand;
  cand.reserve(pool);
  for (std::size_t i = 0; i < pool; ++i) {
    const Vec3 dir = random_unit_vector(rng);
    const double f = detail::implicit_local(unit, e1, e2, dir);
    // The implicit function is homogeneous of degree 2/e1 along rays.
    const double r = std::pow(f, -e1 / 2.0);
    const Vec3 s = r * dir;
    Vec3 n = detail::gradient_local(unit, e1, e2, s);
    const double nlen = n.norm();
    double weight = 0.0;
    if (nlen > 0.0 && std::isfinite(nlen)) {
      n /= nlen;
      const double cosine = std::max(n.dot(dir), 1e-6);
      weight = r * r * n.cwiseQuotient(sq.axes).norm() / cosine;
    }
    const double u = std::max(uniform(rng), 1e-300);
    const double key = weight > 0.0 ? std::log(u) / weight : -std::numeric_limits<double>::infinity();
    cand.push_back({s.cwiseProduct(sq.axes), key});
  }
  std::vector<std::size_t> order(pool);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return cand[a].key > cand[b].key; });

  PointCloud out;
  out.points.reserve(count);
  out.normals.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const Vec3& local = cand[order[k % pool]].local;
    Vec3 n = detail::gradient_local(sq.axes, e1, e2, local);
    n.normalize();
    out.push_back(sq.pose.apply(local), sq.pose.R * n);
  }
  return out;
}

/// Thresholds deciding when a superquadric admits the axis-swap alternates.
struct EquivalenceConfig {
  double eps_band = 0.3;
  double axis_tol = 0.1;
};

inline bool admits_alternates(const Superquadric& sq, const EquivalenceConfig& cfg = {}) {
  const double near_edge = std::min(sq.eps2, 2.0 - sq.eps2);
  const double axis_gap = std::abs(sq.ax() - sq.ay()) / std::max(sq.ax(), sq.ay());
  return near_edge <= cfg.eps_band && axis_gap <= cfg.axis_tol;
}

/// Re-labels the local z-axis as x: 90 degree turn about local y.
inline Superquadric swap_z_to_x(const Superquadric& sq) {
  Superquadric alt = sq;
  alt.axes = Vec3(sq.az(), sq.ay(), sq.ax());
  alt.eps1 = sq.eps2;
  alt.eps2 = sq.eps1;
  alt.pose.R = sq.pose.R * rot_y(kPi / 2.0);
  return alt;
}

/// Re-labels the local z-axis as y: -90 degree turn about local x.
inline Superquadric swap_z_to_y(const Superquadric& sq) {
  Superquadric alt = sq;
  alt.axes = Vec3(sq.ax(), sq.az(), sq.ay());
  alt.eps1 = sq.eps2;
  alt.eps2 = sq.eps1;
  alt.pose.R = sq.pose.R * rot_x(-kPi / 2.0);
  return alt;
}

/// The input followed by its equivalent representations (if any).
inline std::vector<Superquadric> equivalent_parameterizations(const Superquadric& sq,
                                                              const EquivalenceConfig& cfg = {}) {
  if (!(cfg.eps_band > 0.0 && cfg.eps_band < 1.0 && cfg.axis_tol > 0.0 && cfg.axis_tol < 1.0)) {
    throw Error(ErrorCode::invalid_argument, "equivalent_parameterizations: thresholds must lie in (0,1)");
  }
  std::vector<Superquadric> reps{sq};
  if (admits_alternates(sq, cfg)) {
    reps.push_back(swap_z_to_x(sq));
    reps.push_back(swap_z_to_y(sq));
  }
  return reps;
}

}  // namespace sqg
