#pragma once

#include <sqgrasp/common.hpp>

#include <array>
#include <limits>
#include <unordered_map>

namespace sqg {

/// Farthest-point sampling over `points[candidates]`. Selection starts from
/// `seeds` (already-chosen indices, kept in order) or, when empty, from the
/// first candidate. Returns at most `target` indices into `points`.
inline std::vector<std::size_t> farthest_point_sampling(const std::vector<Vec3>& points,
                                                        const std::vector<std::size_t>& candidates,
                                                        std::size_t target,
                                                        const std::vector<std::size_t>& seeds = {}) {
  std::vector<std::size_t> chosen(seeds.begin(), seeds.end());
  if (chosen.size() >= target || candidates.empty()) {
    if (chosen.size() > target) chosen.resize(target);
    return chosen;
  }
  std::vector<double> dist(candidates.size(), std::numeric_limits<double>::infinity());
  auto relax = [&](const Vec3& q) {
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      dist[k] = std::min(dist[k], (points[candidates[k]] - q).squaredNorm());
    }
  };
  std::size_t next = 0;
  if (chosen.empty()) {
    chosen.push_back(candidates[0]);
    dist[0] = 0.0;
    relax(points[candidates[0]]);
  } else {
    for (auto s : chosen) relax(points[s]);
  }
  while (chosen.size() < target) {
    double best = -1.0;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      if (dist[k] > best) {
        best = dist[k];
        next = k;
      }
    }
    if (best <= 0.0) break;  // every remaining candidate coincides with a chosen point
    chosen.push_back(candidates[next]);
    dist[next] = 0.0;
    relax(points[candidates[next]]);
  }
  return chosen;
}

inline std::vector<std::size_t> farthest_point_sampling(const std::vector<Vec3>& points, std::size_t target) {
  std::vector<std::size_t> all(points.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return farthest_point_sampling(points, all, target);
}

/// Repeats `idx` cyclically until it has exactly `target` entries.
inline std::vector<std::size_t> pad_cyclic(std::vector<std::size_t> idx, std::size_t target) {
  if (idx.empty()) return idx;
  const std::size_t n = idx.size();
  for (std::size_t k = 0; idx.size() < target; ++k) idx.push_back(idx[k % n]);
  idx.resize(target);
  return idx;
}

/// Uniform voxel hash for fixed-radius neighbor queries.
class PointGrid {
 public:
  PointGrid(const std::vector<Vec3>& points, double cell) : points_(points), cell_(cell) {
    if (!(cell > 0.0)) throw Error(ErrorCode::invalid_argument, "PointGrid: cell size must be positive");
    for (std::size_t i = 0; i < points.size(); ++i) cells_[key(coord(points[i]))].push_back(i);
  }

  /// Indices within `radius` of `q`, ascending.
  std::vector<std::size_t> within(const Vec3& q, double radius) const {
    std::vector<std::size_t> out;
    const auto lo = coord(q - Vec3::Constant(radius));
    const auto hi = coord(q + Vec3::Constant(radius));
    const double r2 = radius * radius;
    for (auto x = lo[0]; x <= hi[0]; ++x) {
      for (auto y = lo[1]; y <= hi[1]; ++y) {
        for (auto z = lo[2]; z <= hi[2]; ++z) {
          const auto it = cells_.find(key({x, y, z}));
          if (it == cells_.end()) continue;
          for (auto i : it->second) {
            if ((points_[i] - q).squaredNorm() <= r2) out.push_back(i);
          }
        }
      }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  /// The k nearest points to `q` (ascending distance, then index).
  std::vector<std::size_t> nearest(const Vec3& q, std::size_t k) const {
    k = std::min(k, points_.size());
    double radius = cell_;
    for (;;) {
      auto idx = within(q, radius);
      if (idx.size() >= k || idx.size() == points_.size()) {
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
          return (points_[a] - q).squaredNorm() < (points_[b] - q).squaredNorm();
        });
        idx.resize(std::min(k, idx.size()));
        return idx;
      }
      radius *= 2.0;
    }
  }

 private:
  std::array<std::int64_t, 3> coord(const Vec3& p) const {
    return {static_cast<std::int64_t>(std::floor(p.x() / cell_)), static_cast<std::int64_t>(std::floor(p.y() / cell_)),
            static_cast<std::int64_t>(std::floor(p.z() / cell_))};
  }
  static std::uint64_t key(const std::array<std::int64_t, 3>& c) {
    std::uint64_t h = 0;
    for (auto v : c) h = splitmix64(h ^ static_cast<std::uint64_t>(v));
    return h;
  }

  const std::vector<Vec3>& points_;
  double cell_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

}  // namespace sqg
