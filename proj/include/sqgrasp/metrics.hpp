#pragma once

// Training losses as pure functions and the decluttering metrics
// (grasp success rate, task success rate, grasp attempts).

#include <sqgrasp/common.hpp>

#include <array>
#include <map>
#include <sstream>

namespace sqg {

inline constexpr double kProbabilityFloor = 1e-12;

/// Clamps every probability into [1e-12, 1].
inline std::vector<std::vector<double>> clamp_probabilities(std::vector<std::vector<double>> p) {
  for (auto& row : p) {
    for (auto& v : row) v = std::clamp(v, kProbabilityFloor, 1.0);
  }
  return p;
}

/// Label-smoothed cross-entropy over B rows of C class probabilities.
inline double ce_label_smooth(const std::vector<std::vector<double>>& p, const std::vector<int>& labels, double eps) {
  if (p.empty() || p.size() != labels.size()) {
    throw Error(ErrorCode::invalid_argument, "ce_label_smooth: need one label per non-empty probability row");
  }
  if (!(eps >= 0.0 && eps < 1.0)) throw Error(ErrorCode::invalid_argument, "ce_label_smooth: eps must lie in [0,1)");
  const std::size_t C = p.front().size();
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i].size() != C || C == 0) throw Error(ErrorCode::invalid_argument, "ce_label_smooth: ragged rows");
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= C) {
      throw Error(ErrorCode::invalid_argument, "ce_label_smooth: label out of range");
    }
    double sum = 0.0, logs = 0.0;
    for (double v : p[i]) {
      if (!(v > 0.0)) throw Error(ErrorCode::zero_probability, "ce_label_smooth: probabilities must be positive");
      sum += v;
      logs += std::log(v);
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorCode::invalid_argument, "ce_label_smooth: rows must sum to 1");
    const double own = std::log(p[i][static_cast<std::size_t>(labels[i])]);
    total += (1.0 - eps) * own + (eps / static_cast<double>(C)) * logs;
  }
  return -total / static_cast<double>(p.size());
}

/// log(1 + e^z) without overflow.
inline double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

/// Mean binary cross-entropy of the three refinement logits per sample.
inline double bce_refine(const std::vector<std::array<double, 3>>& z, const std::vector<std::array<int, 3>>& y) {
  if (z.empty() || z.size() != y.size()) throw Error(ErrorCode::invalid_argument, "bce_refine: shapes must match");
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      if (y[i][j] != 0 && y[i][j] != 1) throw Error(ErrorCode::invalid_argument, "bce_refine: labels must be 0 or 1");
      total += softplus(z[i][j]) - static_cast<double>(y[i][j]) * z[i][j];
    }
  }
  return total / (3.0 * static_cast<double>(z.size()));
}

inline double combined_loss(double le, double lr, double lambda1 = 1.0, double lambda2 = 1.0) {
  if (!(le >= 0.0 && lr >= 0.0)) throw Error(ErrorCode::invalid_argument, "combined_loss: losses must be non-negative");
  return lambda1 * le + lambda2 * lr;
}

// ---------------------------------------------------------------------------
// Metrics

struct AttemptEntry {
  std::size_t scene = 0;
  bool success = false;
};

struct AttemptLog {
  std::vector<AttemptEntry> attempts;
  std::map<std::size_t, std::size_t> objects;  // scene -> object count

  void add_scene(std::size_t scene, std::size_t object_count) { objects[scene] = object_count; }
  void add_attempt(std::size_t scene, bool success) { attempts.push_back({scene, success}); }
};

enum class MetricsMode { aggregate, per_scene_mean };

struct Metrics {
  std::optional<double> gsr;  // fractions in [0,1]; absent without attempts
  std::optional<double> tsr;  // absent without objects
  std::size_t ga = 0;
  std::size_t successes = 0;
  std::size_t objects = 0;
};

inline Metrics compute_metrics(const AttemptLog& log, MetricsMode mode) {
  if (log.objects.empty() && log.attempts.empty()) throw Error(ErrorCode::invalid_argument, "compute_metrics: empty log");
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> tally;  // scene -> (attempts, successes)
  for (const auto& [scene, n] : log.objects) tally[scene];
  for (const auto& a : log.attempts) {
    auto& t = tally[a.scene];
    ++t.first;
    t.second += a.success ? 1 : 0;
  }
  Metrics m;
  for (const auto& [scene, t] : tally) {
    m.ga += t.first;
    m.successes += t.second;
    const auto it = log.objects.find(scene);
    m.objects += it == log.objects.end() ? 0 : it->second;
  }
  if (mode == MetricsMode::aggregate) {
    if (m.ga > 0) m.gsr = static_cast<double>(m.successes) / static_cast<double>(m.ga);
    if (m.objects > 0) m.tsr = static_cast<double>(m.successes) / static_cast<double>(m.objects);
    return m;
  }
  double gsr_sum = 0.0, tsr_sum = 0.0;
  std::size_t gsr_n = 0, tsr_n = 0;
  for (const auto& [scene, t] : tally) {
    if (t.first > 0) {
      gsr_sum += static_cast<double>(t.second) / static_cast<double>(t.first);
      ++gsr_n;
    }
    const auto it = log.objects.find(scene);
    if (it != log.objects.end() && it->second > 0) {
      tsr_sum += static_cast<double>(t.second) / static_cast<double>(it->second);
      ++tsr_n;
    }
  }
  if (gsr_n > 0) m.gsr = gsr_sum / static_cast<double>(gsr_n);
  if (tsr_n > 0) m.tsr = tsr_sum / static_cast<double>(tsr_n);
  return m;
}

/// Percentage rounded to two decimals, as reported in result tables.
inline double percent2(double fraction) { return std::round(fraction * 1e4) / 1e2; }

/// Aligned plain-text table: one row per (label, metrics) pair.
inline std::string metrics_table(const std::vector<std::pair<std::string, Metrics>>& rows) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-16s %10s %10s %8s\n", "Mode", "GSR(%)", "TSR(%)", "GA");
  os << line;
  auto cell = [](const std::optional<double>& v) {
    char buf[32] = "-";
    if (v) std::snprintf(buf, sizeof buf, "%.2f", percent2(*v));
    return std::string(buf);
  };
  for (const auto& [label, m] : rows) {
    std::snprintf(line, sizeof line, "%-16s %10s %10s %8zu\n", label.c_str(), cell(m.gsr).c_str(), cell(m.tsr).c_str(), m.ga);
    os << line;
  }
  return os.str();
}

}  // namespace sqg
