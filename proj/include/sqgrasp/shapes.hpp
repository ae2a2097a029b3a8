#pragma once

// Primitive families. Cuboids, (elliptical) cylinders and ellipsoids are exact
// superquadrics; frustums are truncated cones with their own inside test.
// Ellipsoids are not part of the default database grid.

#include <sqgrasp/superquadric.hpp>

namespace sqg {

enum class Family { cuboid, cylinder, elliptical_cylinder, frustum, ellipsoid };

inline const char* to_string(Family f) {
  switch (f) {
    case Family::cuboid: return "cuboid";
    case Family::cylinder: return "cylinder";
    case Family::elliptical_cylinder: return "elliptical_cylinder";
    case Family::frustum: return "frustum";
    case Family::ellipsoid: return "ellipsoid";
  }
  return "unknown";
}

inline Family family_from_string(std::string_view s) {
  if (s == "cuboid") return Family::cuboid;
  if (s == "cylinder") return Family::cylinder;
  if (s == "elliptical_cylinder") return Family::elliptical_cylinder;
  if (s == "frustum") return Family::frustum;
  if (s == "ellipsoid") return Family::ellipsoid;
  throw Error(ErrorCode::invalid_argument, "unknown family '" + std::string(s) + "'");
}

inline constexpr double kBoxExponent = 0.1;

/// A primitive in its own frame. `dims` per family:
/// cuboid (hx, hy, hz), cylinder (r, r, h/2), elliptical_cylinder (rx, ry, h/2),
/// frustum (bottom radius, top radius, h/2) with the axis along z,
/// ellipsoid (rx, ry, rz).
struct Shape {
  Family family = Family::cuboid;
  Vec3 dims = Vec3::Constant(0.02);
};

inline bool is_superquadric_family(Family f) { return f != Family::frustum; }

inline Superquadric shape_superquadric(const Shape& s) {
  if (!is_superquadric_family(s.family)) {
    throw Error(ErrorCode::invalid_argument, "shape_superquadric: frustums are not superquadrics");
  }
  Superquadric sq;
  sq.axes = s.dims;
  sq.eps1 = s.family == Family::ellipsoid ? 1.0 : kBoxExponent;
  sq.eps2 = s.family == Family::cuboid ? kBoxExponent : 1.0;
  return sq;
}

namespace detail {

inline double frustum_radius(const Vec3& d, double z) {
  return d.x() + (d.y() - d.x()) * (z + d.z()) / (2.0 * d.z());
}

}  // namespace detail

/// < 1 inside, 1 on the surface, > 1 outside.
inline double inside_value(const Shape& s, const Vec3& p) {
  if (is_superquadric_family(s.family)) {
    const Superquadric sq = shape_superquadric(s);
    return detail::implicit_local(sq.axes, sq.eps1, sq.eps2, p);
  }
  const Vec3& d = s.dims;
  const double r = std::max(detail::frustum_radius(d, std::clamp(p.z(), -d.z(), d.z())), 1e-9);
  const double v = std::max(std::abs(p.z()) / d.z(), std::hypot(p.x(), p.y()) / r);
  return v * v;
}

inline double bounding_radius(const Shape& s) {
  if (s.family == Family::frustum) return std::hypot(std::max(s.dims.x(), s.dims.y()), s.dims.z());
  return s.dims.norm();
}

inline double surface_area(const Shape& s) {
  const Vec3& d = s.dims;
  switch (s.family) {
    case Family::cuboid: return 8.0 * (d.x() * d.y() + d.y() * d.z() + d.x() * d.z());
    case Family::cylinder:
    case Family::elliptical_cylinder: {
      const double a = d.x(), b = d.y();
      const double h = (a - b) * (a - b) / ((a + b) * (a + b));
      const double perimeter = kPi * (a + b) * (1.0 + 3.0 * h / (10.0 + std::sqrt(4.0 - 3.0 * h)));
      return 2.0 * kPi * a * b + perimeter * 2.0 * d.z();
    }
    case Family::ellipsoid: {
      // Thomsen's approximation, exact for spheres.
      constexpr double p = 1.6075;
      const double m = (std::pow(d.x() * d.y(), p) + std::pow(d.x() * d.z(), p) + std::pow(d.y() * d.z(), p)) / 3.0;
      return 4.0 * kPi * std::pow(m, 1.0 / p);
    }
    case Family::frustum: {
      const double slant = std::hypot(d.x() - d.y(), 2.0 * d.z());
      return kPi * (d.x() * d.x() + d.y() * d.y()) + kPi * (d.x() + d.y()) * slant;
    }
  }
  return 0.0;
}

/// Area-uniform samples of a truncated cone with outward normals.
inline PointCloud sample_frustum(const Vec3& d, std::size_t count, std::uint64_t seed) {
  const double rb = d.x(), rt = d.y(), hh = d.z();
  const double slant = std::hypot(rb - rt, 2.0 * hh);
  const double a_side = kPi * (rb + rt) * slant;
  const double a_bottom = kPi * rb * rb;
  const double a_top = kPi * rt * rt;
  const double total = a_side + a_bottom + a_top;
  const Vec3 side_dir(2.0 * hh, 2.0 * hh, rb - rt);  // unnormalized (radial, radial, axial)
  Rng rng = make_rng(seed, "sample_frustum");
  PointCloud out;
  out.points.reserve(count);
  out.normals.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double pick = uniform(rng) * total;
    const double phi = uniform(rng, 0.0, 2.0 * kPi);
    const double c = std::cos(phi), s = std::sin(phi);
    if (pick < a_side) {
      // Radius is linear in height, so the height density is linear in radius.
      const double u = uniform(rng);
      double t;
      if (std::abs(rb - rt) < 1e-12) {
        t = u;
      } else {
        t = (std::sqrt(rb * rb + u * (rt * rt - rb * rb)) - rb) / (rt - rb);
      }
      const double r = rb + (rt - rb) * t;
      const double z = -hh + 2.0 * hh * t;
      Vec3 n(side_dir.x() * c, side_dir.y() * s, side_dir.z());
      out.push_back(Vec3(r * c, r * s, z), n.normalized());
    } else if (pick < a_side + a_bottom) {
      const double r = rb * std::sqrt(uniform(rng));
      out.push_back(Vec3(r * c, r * s, -hh), Vec3(0, 0, -1));
    } else {
      const double r = rt * std::sqrt(uniform(rng));
      out.push_back(Vec3(r * c, r * s, hh), Vec3(0, 0, 1));
    }
  }
  return out;
}

inline PointCloud sample_shape(const Shape& s, std::size_t count, std::uint64_t seed) {
  if (is_superquadric_family(s.family)) return sample_surface(shape_superquadric(s), count, seed);
  return sample_frustum(s.dims, count, seed);
}

}  // namespace sqg
