#pragma once

// Superquadric recovery from point clouds.
//
// Objective (per point, in the local frame of the candidate superquadric):
//   r_i = sqrt(a_x a_y a_z) * (F(p_i)^eps1 - 1)
// robustified with a Huber loss and minimized over axes, exponents, rotation
// and translation by Levenberg-Marquardt. Initializations are the principal
// axes of the cloud in all six axis orders.

#include <sqgrasp/superquadric.hpp>

#include <ceres/ceres.h>
#include <ceres/rotation.h>

#include <Eigen/Eigenvalues>

#include <array>

namespace sqg {

struct FitConfig {
  int restarts = 6;
  int max_iters = 200;
  double residual_tol = 0.002;  // meters, radial distance counted as inlier
  double eps_low = 0.1;
  double eps_high = 1.9;
  double huber_delta = 0.02;
  std::size_t max_points = 600;  // larger clouds are thinned to this many points
  std::optional<Vec3> view_direction;  // camera -> scene, for single-view clouds
  double axis_cap = 1.0;  // semi-axis bound as a multiple of the diameter estimate
  std::optional<double> support_z;  // world height the fitted surface must stay above
  std::optional<double> silhouette_margin = 0.003;  // with view_direction; unset disables
};

struct FitResult {
  Superquadric sq;
  double residual = 0.0;
  double inlier_fraction = 0.0;
  bool converged = true;
  int restart = 0;
};

namespace detail {

/// Support function max_{x in S} u.x of the origin-centered superquadric
/// (valid for exponents up to 2, where the surface bounds a convex set).
template <typename T>
T support_extent(const T* shape, const T* u) {
  const T tiny(1e-12);
  const T q2 = T(2.0) / (T(2.0) - shape[4]);
  const T q1 = T(2.0) / (T(2.0) - shape[3]);
  const T inner = ceres::pow(ceres::pow(ceres::abs(shape[0] * u[0]) + tiny, q2) +
                                 ceres::pow(ceres::abs(shape[1] * u[1]) + tiny, q2),
                             T(1.0) / q2);
  return ceres::pow(ceres::pow(inner, q1) + ceres::pow(ceres::abs(shape[2] * u[2]) + tiny, q1), T(1.0) / q1);
}

// Penalizes any part of the surface beyond the plane d.x = bound. `d` and the
// translation live in the solver's pre-rotated frame.
struct HalfspaceResidual {
  HalfspaceResidual(const Vec3& d, double bound, double weight) : d_(d), b_(bound), w_(weight) {}

  template <typename T>
  bool operator()(const T* shape, const T* rotation, const T* translation, T* residual) const {
    const T inv[3] = {-rotation[0], -rotation[1], -rotation[2]};
    const T d[3] = {T(d_.x()), T(d_.y()), T(d_.z())};
    T dl[3];
    ceres::AngleAxisRotatePoint(inv, d, dl);
    const T farthest = d[0] * translation[0] + d[1] * translation[1] + d[2] * translation[2] + support_extent(shape, dl);
    const T violation = farthest - T(b_);
    residual[0] = violation > T(0.0) ? T(w_) * violation : T(0.0);
    return true;
  }

 private:
  Vec3 d_;
  double b_;
  double w_;
};

struct Halfspace {
  Vec3 d;  // unit outward direction, world frame
  double bound;
};

inline double halfspace_violation(const Superquadric& sq, const Halfspace& h) {
  const double shape[5] = {sq.ax(), sq.ay(), sq.az(), sq.eps1, sq.eps2};
  const Vec3 dl = sq.pose.R.transpose() * h.d;
  const double u[3] = {dl.x(), dl.y(), dl.z()};
  return std::max(0.0, h.d.dot(sq.pose.t) + support_extent(shape, u) - h.bound);
}

inline double halfspace_weight(double extent) { return 20.0 * std::sqrt(extent); }

// The support plane, and for single-view clouds the silhouette: across the
// view ray the surface cannot reach past the observed points.
inline std::vector<Halfspace> fit_halfspaces(const std::vector<Vec3>& pts, const FitConfig& cfg) {
  std::vector<Halfspace> out;
  if (cfg.support_z) out.push_back({-Vec3::UnitZ(), -*cfg.support_z});
  if (cfg.view_direction && cfg.silhouette_margin) {
    const Vec3 v = cfg.view_direction->normalized();
    const Vec3 u1 = v.unitOrthogonal();
    const Vec3 u2 = v.cross(u1);
    for (int k = 0; k < 8; ++k) {
      const double th = kPi * k / 4.0;
      const Vec3 d = std::cos(th) * u1 + std::sin(th) * u2;
      double hi = -std::numeric_limits<double>::infinity();
      for (const auto& p : pts) hi = std::max(hi, d.dot(p));
      out.push_back({d, hi + *cfg.silhouette_margin});
    }
  }
  return out;
}

struct RadialImplicitResidual {
  explicit RadialImplicitResidual(const Vec3& q) : q_(q) {}

  template <typename T>
  bool operator()(const T* shape, const T* rotation, const T* translation, T* residual) const {
    const T d[3] = {T(q_.x()) - translation[0], T(q_.y()) - translation[1], T(q_.z()) - translation[2]};
    const T inv[3] = {-rotation[0], -rotation[1], -rotation[2]};
    T l[3];
    ceres::AngleAxisRotatePoint(inv, d, l);
    const T& e1 = shape[3];
    const T& e2 = shape[4];
    const T tiny(1e-12);
    const T fx = ceres::pow(ceres::abs(l[0] / shape[0]) + tiny, T(2.0) / e2);
    const T fy = ceres::pow(ceres::abs(l[1] / shape[1]) + tiny, T(2.0) / e2);
    const T fz = ceres::pow(ceres::abs(l[2] / shape[2]) + tiny, T(2.0) / e1);
    const T f = ceres::pow(fx + fy, e2 / e1) + fz;
    residual[0] = ceres::sqrt(shape[0] * shape[1] * shape[2]) * (ceres::pow(f, e1) - T(1.0));
    return true;
  }

 private:
  Vec3 q_;
};

inline double huber(double r, double delta) {
  const double a = std::abs(r);
  return a <= delta ? r * r : 2.0 * delta * a - delta * delta;
}

struct Scores {
  double residual;
  double inlier_fraction;
};

inline Scores score_fit(const Superquadric& sq, const std::vector<Vec3>& pts, const FitConfig& cfg,
                        const std::vector<Halfspace>& halfspaces, double extent) {
  double sum = 0.0;
  std::size_t inliers = 0;
  const double scale = std::sqrt(sq.axes.prod());
  for (const auto& p : pts) {
    const Vec3 l = sq.pose.apply_inverse(p);
    const double f = implicit_local(sq.axes, sq.eps1, sq.eps2, l);
    sum += huber(scale * (std::pow(f, sq.eps1) - 1.0), cfg.huber_delta);
    const double radial = l.norm() * std::abs(1.0 - std::pow(f, -sq.eps1 / 2.0));
    if (f == 0.0 || radial <= cfg.residual_tol) ++inliers;
  }
  const double n = static_cast<double>(pts.size());
  double penalty = 0.0;
  for (const auto& h : halfspaces) penalty += std::pow(halfspace_weight(extent) * halfspace_violation(sq, h), 2.0);
  return {sum / n + penalty, static_cast<double>(inliers) / n};
}

struct Initialization {
  Mat3 R;
  Vec3 t;
  Vec3 axes;
  double eps1;
  double eps2;
};

inline std::vector<Initialization> initializations(const std::vector<Vec3>& pts, const FitConfig& cfg) {
  Vec3 c = Vec3::Zero();
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& p : pts) cov += (p - c) * (p - c).transpose();
  cov /= static_cast<double>(pts.size());
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  const Vec3 evals = eig.eigenvalues();
  if (!(evals[2] > 0.0) || evals[1] <= 1e-10 * evals[2]) {
    throw Error(ErrorCode::unfittable_input, "fit_superquadric: cloud spans fewer than two directions");
  }
  Mat3 V = eig.eigenvectors();
  // Deterministic eigenvector signs.
  for (int k = 0; k < 3; ++k) {
    int big = 0;
    V.col(k).cwiseAbs().maxCoeff(&big);
    if (V(big, k) < 0) V.col(k) *= -1.0;
  }

  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const auto& p : pts) {
    const Vec3 q = V.transpose() * (p - c);
    lo = lo.cwiseMin(q);
    hi = hi.cwiseMax(q);
  }
  Vec3 half = 0.5 * (hi - lo);
  Vec3 center = c + V * (0.5 * (hi + lo));
  half = half.cwiseMax(1e-3 * half.maxCoeff());

  if (cfg.view_direction) {
    const Vec3 v = cfg.view_direction->normalized();
    double dmin = std::numeric_limits<double>::infinity(), dmax = -dmin;
    const Vec3 u1 = v.unitOrthogonal();
    const Vec3 u2 = v.cross(u1);
    double l1 = dmin, h1 = dmax, l2 = dmin, h2 = dmax;
    for (const auto& p : pts) {
      const double d = v.dot(p);
      dmin = std::min(dmin, d);
      dmax = std::max(dmax, d);
      l1 = std::min(l1, u1.dot(p));
      h1 = std::max(h1, u1.dot(p));
      l2 = std::min(l2, u2.dot(p));
      h2 = std::max(h2, u2.dot(p));
    }
    const double visible_depth = dmax - dmin;
    const double lateral = std::max(h1 - l1, h2 - l2);
    const double missing = std::max(0.0, lateral - visible_depth);
    center += 0.5 * missing * v;
    int along = 0;
    (V.transpose() * v).cwiseAbs().maxCoeff(&along);
    half[along] = std::max(half[along], 0.5 * (visible_depth + missing));
  }

  static constexpr std::array<std::array<int, 3>, 6> kOrders = {
      {{0, 1, 2}, {1, 2, 0}, {2, 0, 1}, {1, 0, 2}, {0, 2, 1}, {2, 1, 0}}};
  static constexpr std::array<std::array<double, 2>, 3> kExponents = {{{1.0, 1.0}, {0.5, 0.5}, {0.5, 1.0}}};

  std::vector<Initialization> out;
  for (int r = 0; r < cfg.restarts; ++r) {
    const auto& order = kOrders[static_cast<std::size_t>(r) % kOrders.size()];
    const auto& ex = kExponents[(static_cast<std::size_t>(r) / kOrders.size()) % kExponents.size()];
    Mat3 R;
    Vec3 a;
    for (int k = 0; k < 3; ++k) {
      R.col(k) = V.col(order[static_cast<std::size_t>(k)]);
      a[k] = half[order[static_cast<std::size_t>(k)]];
    }
    if (R.determinant() < 0) R.col(0) *= -1.0;
    const double lo_e = cfg.eps_low, hi_e = cfg.eps_high;
    out.push_back({R, center, a, std::clamp(ex[0], lo_e, hi_e), std::clamp(ex[1], lo_e, hi_e)});
  }
  return out;
}

inline FitResult solve_from(const std::vector<Vec3>& pts, const Initialization& init, const FitConfig& cfg,
                            const std::vector<Halfspace>& halfspaces, double extent, double axis_cap) {
  double shape[5] = {std::min(init.axes.x(), axis_cap), std::min(init.axes.y(), axis_cap),
                     std::min(init.axes.z(), axis_cap), init.eps1, init.eps2};
  double rotation[3] = {0.0, 0.0, 0.0};
  const Vec3 t0 = init.R.transpose() * init.t;
  double translation[3] = {t0.x(), t0.y(), t0.z()};

  ceres::Problem::Options popts;
  popts.loss_function_ownership = ceres::TAKE_OWNERSHIP;
  ceres::Problem problem(popts);
  ceres::LossFunction* loss = new ceres::HuberLoss(cfg.huber_delta);
  for (const auto& p : pts) {
    auto* cost = new ceres::AutoDiffCostFunction<RadialImplicitResidual, 1, 5, 3, 3>(
        new RadialImplicitResidual(init.R.transpose() * p));
    problem.AddResidualBlock(cost, loss, shape, rotation, translation);
  }
  const double w = halfspace_weight(extent) * std::sqrt(static_cast<double>(pts.size()));
  for (const auto& h : halfspaces) {
    auto* cost = new ceres::AutoDiffCostFunction<HalfspaceResidual, 1, 5, 3, 3>(
        new HalfspaceResidual(init.R.transpose() * h.d, h.bound, w));
    problem.AddResidualBlock(cost, nullptr, shape, rotation, translation);
  }
  for (int k = 0; k < 3; ++k) {
    problem.SetParameterLowerBound(shape, k, 1e-4 * extent);
    problem.SetParameterUpperBound(shape, k, axis_cap);
  }
  for (int k = 3; k < 5; ++k) {
    problem.SetParameterLowerBound(shape, k, cfg.eps_low);
    problem.SetParameterUpperBound(shape, k, cfg.eps_high);
  }

  ceres::Solver::Options opts;
  opts.linear_solver_type = ceres::DENSE_QR;
  opts.max_num_iterations = cfg.max_iters;
  opts.function_tolerance = 1e-12;
  opts.gradient_tolerance = 1e-14;
  opts.parameter_tolerance = 1e-12;
  opts.num_threads = 1;
  opts.logging_type = ceres::SILENT;
  ceres::Solver::Summary summary;
  ceres::Solve(opts, &problem, &summary);

  Mat3 dR;
  ceres::AngleAxisToRotationMatrix(rotation, ceres::ColumnMajorAdapter3x3(dR.data()));
  FitResult fr;
  fr.sq.axes = Vec3(shape[0], shape[1], shape[2]);
  fr.sq.eps1 = std::clamp(shape[3], cfg.eps_low, cfg.eps_high);
  fr.sq.eps2 = std::clamp(shape[4], cfg.eps_low, cfg.eps_high);
  fr.sq.pose.R = orthonormalize(init.R * dR);
  fr.sq.pose.t = init.R * Vec3(translation[0], translation[1], translation[2]);
  fr.converged = summary.termination_type == ceres::CONVERGENCE;
  const auto sc = score_fit(fr.sq, pts, cfg, halfspaces, extent);
  fr.residual = sc.residual;
  fr.inlier_fraction = sc.inlier_fraction;
  return fr;
}

}  // namespace detail

/// Recovers superquadric coefficients and pose from a cloud.
inline FitResult fit_superquadric(const PointCloud& cloud, const FitConfig& cfg = {}) {
  if (cfg.restarts < 1) throw Error(ErrorCode::invalid_argument, "fit_superquadric: restarts must be >= 1");
  if (!(cfg.axis_cap > 0.0)) throw Error(ErrorCode::invalid_argument, "fit_superquadric: axis_cap must be positive");
  if (!(cfg.eps_low >= kMinExponent && cfg.eps_high <= kMaxExponent && cfg.eps_low < cfg.eps_high)) {
    throw Error(ErrorCode::invalid_argument, "fit_superquadric: exponent bounds must lie in [0.05, 2]");
  }
  if (cloud.size() < 20) {
    throw Error(ErrorCode::unfittable_input, "fit_superquadric: need at least 20 points");
  }
  std::vector<Vec3> pts = cloud.points;
  if (cfg.max_points > 0 && pts.size() > cfg.max_points) {
    // Evenly strided thinning keeps the point distribution (and so the
    // principal axes) of the input.
    pts.clear();
    const std::size_t n = cloud.size();
    for (std::size_t i = 0; i < cfg.max_points; ++i) pts.push_back(cloud.points[i * n / cfg.max_points]);
  }
  const auto inits = detail::initializations(pts, cfg);

  double extent = 0.0;
  for (const auto& p : pts) extent = std::max(extent, (p - pts.front()).norm());
  extent = std::max(extent, 1e-6);
  // Two farthest-point sweeps give a diameter estimate D' with D/2 <= D' <= D,
  // so a semi-axis of a complete cloud never exceeds D'.
  Vec3 far = pts.front();
  for (const auto& p : pts) if ((p - pts.front()).norm() > (far - pts.front()).norm()) far = p;
  double diameter = 0.0;
  for (const auto& p : pts) diameter = std::max(diameter, (p - far).norm());
  const double axis_cap = cfg.axis_cap * std::max(diameter, 1e-6);
  const auto halfspaces = detail::fit_halfspaces(pts, cfg);

  std::optional<FitResult> best;
  for (std::size_t r = 0; r < inits.size(); ++r) {
    FitResult fr = detail::solve_from(pts, inits[r], cfg, halfspaces, extent, axis_cap);
    fr.restart = static_cast<int>(r);
    if (!best || fr.residual < best->residual) best = fr;
  }

  // Switching step. Starting from the best solution, re-optimize from
  // candidates that LM cannot reach by local moves: the other two choices of
  // the z-axis, and, for a near-circular cross-section (whose in-plane
  // orientation the principal axes leave arbitrary), the basin turned by 45
  // degrees about z with eps2 mirrored about 1.
  for (int round = 0; round < 3; ++round) {
    const Superquadric b = best->sq;
    std::vector<detail::Initialization> cands;
    for (const Superquadric& alt : {swap_z_to_x(b), swap_z_to_y(b)}) {
      cands.push_back({alt.pose.R, alt.pose.t, alt.axes, alt.eps1, alt.eps2});
    }
    if (std::abs(b.ax() - b.ay()) <= 0.25 * std::max(b.ax(), b.ay())) {
      const double side = std::sqrt(b.ax() * b.ay()) * std::pow(2.0, (1.0 - b.eps2) / 2.0);
      Superquadric turned = b;
      turned.pose.R = b.pose.R * rot_z(kPi / 4.0);
      turned.axes = Vec3(side, side, b.az());
      turned.eps2 = std::clamp(2.0 - b.eps2, cfg.eps_low, cfg.eps_high);
      for (const Superquadric& alt : {turned, swap_z_to_x(turned), swap_z_to_y(turned)}) {
        cands.push_back({alt.pose.R, alt.pose.t, alt.axes, alt.eps1, alt.eps2});
      }
    }
    bool improved = false;
    for (const auto& c : cands) {
      FitResult fr = detail::solve_from(pts, c, cfg, halfspaces, extent, axis_cap);
      fr.restart = best->restart;
      if (fr.residual < 0.999 * best->residual) {
        best = fr;
        improved = true;
      }
    }
    if (!improved) break;
  }
  return *best;
}

/// Unique representative: a_x <= a_y (or fully sorted axes when the exponents
/// agree and every axis order describes the same surface), rotation reduced
/// over the mirror symmetries to the one closest to identity.
inline FitResult canonicalize(FitResult fit, double exponent_tol = 0.05) {
  Superquadric& sq = fit.sq;
  Mat3& R = sq.pose.R;
  if (std::abs(sq.eps1 - sq.eps2) <= exponent_tol) {
    std::array<int, 3> idx{0, 1, 2};
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return sq.axes[a] < sq.axes[b]; });
    Mat3 Rn;
    Vec3 an;
    for (int k = 0; k < 3; ++k) {
      Rn.col(k) = R.col(idx[static_cast<std::size_t>(k)]);
      an[k] = sq.axes[idx[static_cast<std::size_t>(k)]];
    }
    if (Rn.determinant() < 0) Rn.col(0) *= -1.0;
    R = Rn;
    sq.axes = an;
  } else if (sq.ax() > sq.ay()) {
    sq.axes = Vec3(sq.ay(), sq.ax(), sq.az());
    R = R * rot_z(kPi / 2.0);
  }
  const bool round = (sq.axes.maxCoeff() - sq.axes.minCoeff()) <= 1e-9 * sq.axes.maxCoeff() &&
                     std::abs(sq.eps1 - 1.0) <= 1e-9 && std::abs(sq.eps2 - 1.0) <= 1e-9;
  if (round) {
    R = Mat3::Identity();
    return fit;
  }
  const std::array<Vec3, 4> flips = {Vec3(1, 1, 1), Vec3(1, -1, -1), Vec3(-1, 1, -1), Vec3(-1, -1, 1)};
  Mat3 bestR = R;
  double best_trace = R.trace();
  for (std::size_t k = 1; k < flips.size(); ++k) {
    const Mat3 cand = R * flips[k].asDiagonal();
    if (cand.trace() > best_trace + 1e-12) {
      best_trace = cand.trace();
      bestR = cand;
    }
  }
  R = bestR;
  return fit;
}

}  // namespace sqg
