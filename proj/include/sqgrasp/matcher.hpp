#pragma once

// Two-step similarity retrieval over the primitive database and rigid grasp
// transfer into the query frame.

#include <sqgrasp/database.hpp>

namespace sqg {

struct MatcherConfig {
  double w_r = 1.0;
  double w_eps = 1.2;
  double lambda_s = 1.6;
  double lambda_a = 2.0;
  std::size_t K1 = 50;
  std::size_t K2 = 5;
  EquivalenceConfig equivalence;

  void validate() const {
    if (!(w_r >= 0.0 && w_eps >= 0.0 && lambda_s >= 0.0 && lambda_a >= 0.0)) {
      throw Error(ErrorCode::invalid_argument, "matcher weights must be non-negative");
    }
    if (K1 == 0 || K2 == 0 || K2 > K1) throw Error(ErrorCode::invalid_argument, "matcher needs 1 <= K2 <= K1");
  }
};

struct ScaleStats {
  double g_mean = 1.0;
  Vec3 r = Vec3::Ones();
};

inline ScaleStats scale_stats(const Superquadric& sq) {
  ScaleStats s;
  s.g_mean = std::cbrt(sq.ax() * sq.ay() * sq.az());
  s.r = sq.axes / s.g_mean;
  return s;
}

struct ShapeDistance {
  double d_eps = 0.0;
  double d_ratio = 0.0;
  double d_shape = 0.0;
};

inline ShapeDistance shape_distance(const Superquadric& q, const Superquadric& c, const MatcherConfig& cfg = {}) {
  ShapeDistance d;
  d.d_eps = std::hypot(q.eps1 - c.eps1, q.eps2 - c.eps2);
  const Vec3 lq = scale_stats(q).r.array().log();
  const Vec3 lc = scale_stats(c).r.array().log();
  d.d_ratio = (lq - lc).norm();
  d.d_shape = cfg.w_r * d.d_ratio + cfg.w_eps * d.d_eps;
  return d;
}

struct MatchResult {
  std::string candidate_id;
  double d_eps = 0.0;
  double d_ratio = 0.0;
  double d_shape = 0.0;
  double d_scale = 0.0;
  double d_abs = 0.0;
  double s = 0.0;
  RigidPose transfer;  // candidate record frame -> query world frame
  int query_rep = 0;
  int candidate_rep = 0;
  int rank = 0;
};

inline MatchResult final_score(const Superquadric& q, const Superquadric& c, const MatcherConfig& cfg = {}) {
  MatchResult m;
  const ShapeDistance sd = shape_distance(q, c, cfg);
  m.d_eps = sd.d_eps;
  m.d_ratio = sd.d_ratio;
  m.d_shape = sd.d_shape;
  m.d_scale = std::abs(std::log(scale_stats(q).g_mean / scale_stats(c).g_mean));
  double acc = 0.0;
  for (int k = 0; k < 3; ++k) acc += std::abs(q.axes[k] - c.axes[k]) / std::max(q.axes[k], c.axes[k]);
  m.d_abs = acc / 3.0;
  m.s = m.d_shape + cfg.lambda_s * m.d_scale + cfg.lambda_a * m.d_abs;
  return m;
}

/// T = P_query * P_candidate^-1 for the winning representation pair.
inline RigidPose transfer_pose(const Superquadric& query_rep, const Superquadric& candidate_rep) {
  return query_rep.pose * candidate_rep.pose.inverse();
}

inline std::vector<MatchResult> retrieve(const Superquadric& query, const DatabaseIndex& db,
                                         const MatcherConfig& cfg = {}, int jobs = 1) {
  cfg.validate();
  if (db.empty() || db.coeff_table.empty()) throw Error(ErrorCode::empty_database, "retrieve: database is empty");
  const auto qreps = equivalent_parameterizations(query, cfg.equivalence);

  // Best representation pair per record by d_shape; ties keep the earlier pair.
  struct Best {
    double d_shape = std::numeric_limits<double>::infinity();
    int qrep = 0;
    std::size_t entry = 0;
  };
  std::vector<std::vector<std::size_t>> entries(db.records.size());
  for (std::size_t e = 0; e < db.coeff_table.size(); ++e) entries[db.coeff_table[e].record].push_back(e);
  std::vector<Best> best(db.records.size());
  parallel_for(db.records.size(), jobs, [&](std::size_t r) {
    for (std::size_t qi = 0; qi < qreps.size(); ++qi) {
      for (auto e : entries[r]) {
        const double d = shape_distance(qreps[qi], db.coeff_table[e].sq, cfg).d_shape;
        if (d < best[r].d_shape) best[r] = {d, static_cast<int>(qi), e};
      }
    }
  });

  std::vector<std::size_t> ids(db.records.size());
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  auto by_shape = [&](std::size_t a, std::size_t b) {
    if (best[a].d_shape != best[b].d_shape) return best[a].d_shape < best[b].d_shape;
    return db.records[a].id < db.records[b].id;
  };
  std::sort(ids.begin(), ids.end(), by_shape);
  ids.resize(std::min(ids.size(), cfg.K1));

  std::vector<MatchResult> out;
  out.reserve(ids.size());
  for (auto r : ids) {
    const CoeffEntry& ce = db.coeff_table[best[r].entry];
    const Superquadric& qrep = qreps[static_cast<std::size_t>(best[r].qrep)];
    MatchResult m = final_score(qrep, ce.sq, cfg);
    m.candidate_id = db.records[r].id;
    m.query_rep = best[r].qrep;
    m.candidate_rep = ce.rep;
    m.transfer = transfer_pose(qrep, ce.sq);
    out.push_back(m);
  }
  std::sort(out.begin(), out.end(), [](const MatchResult& a, const MatchResult& b) {
    if (a.s != b.s) return a.s < b.s;
    return a.candidate_id < b.candidate_id;
  });
  out.resize(std::min(out.size(), cfg.K2));
  for (std::size_t k = 0; k < out.size(); ++k) out[k].rank = static_cast<int>(k);
  return out;
}

inline std::vector<MatchResult> retrieve(const FitResult& query_fit, const DatabaseIndex& db,
                                         const MatcherConfig& cfg = {}, int jobs = 1) {
  return retrieve(query_fit.sq, db, cfg, jobs);
}

/// Record grasps mapped into the query frame with the match's transfer T.
inline std::vector<Grasp> transfer_grasps(const MatchResult& match, const PrimitiveRecord& record,
                                          const FitResult& query_fit, const MatcherConfig& cfg = {}) {
  if (record.id != match.candidate_id) {
    throw Error(ErrorCode::invalid_argument, "transfer_grasps: match does not reference this record");
  }
  const auto qreps = equivalent_parameterizations(query_fit.sq, cfg.equivalence);
  const auto creps = equivalent_parameterizations(record.sq, cfg.equivalence);
  const auto qi = static_cast<std::size_t>(match.query_rep);
  const auto ci = static_cast<std::size_t>(match.candidate_rep);
  if (qi >= qreps.size() || ci >= creps.size()) {
    throw Error(ErrorCode::invalid_argument, "transfer_grasps: representation index out of range");
  }
  const RigidPose T = transfer_pose(qreps[qi], creps[ci]);
  std::vector<Grasp> out;
  out.reserve(record.grasps.size());
  for (const auto& g : record.grasps) {
    Grasp t = transformed(g, T);
    t.provenance.source_id = record.id;
    t.provenance.rank = match.rank;
    out.push_back(t);
  }
  return out;
}

}  // namespace sqg
