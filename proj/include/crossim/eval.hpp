#pragma once

// Behavioural metrics, KDE likelihood scoring, KS distance, ADE/FDE and the
// projected post-encroachment time.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crossim/kde.hpp"
#include "crossim/world.hpp"

namespace crossim {

enum class Metric {
  PedSpeed,
  VehSpeed,
  PedAccel,
  VehAccel,
  PedAngularVelocity,
  PedAngularAccel,
  Distance,
  PedX,
  VehX,
  PedY,
  PedHeading,
  Pet,
};

inline constexpr std::size_t kNumMetrics = 12;

inline constexpr std::array<std::string_view, kNumMetrics> kMetricNames = {
    "ped_speed", "veh_speed", "ped_accel", "veh_accel", "ped_angular_velocity",
    "ped_angular_accel", "distance", "ped_x", "veh_x", "ped_y", "ped_heading", "pet"};

inline std::string_view to_string(Metric m) { return kMetricNames[static_cast<std::size_t>(m)]; }

/// One sample sequence per metric.
using MetricSamples = std::array<std::vector<double>, kNumMetrics>;

/// Time for each agent to reach its crossing line at its current speed
/// component (floored at eps_v); PET = t_veh - t_ped, positive when the
/// pedestrian crosses first. Undefined once an agent has passed its line or
/// moves away from it.
inline std::optional<double> projected_pet(const WorldState& s, const SceneGeometry& g = {},
                                           double eps_v = 0.1) {
  if (!(eps_v > 0.0)) throw ValidationError("eps_v must be positive");
  const double ped_dist = g.crossing_y - s.ped_y;
  const double ped_v = s.ped_speed * std::cos(s.ped_heading);
  const double veh_dist = g.crossing_x - s.veh_x;
  const double veh_v = s.veh_speed;
  if (ped_dist < 0.0 || veh_dist < 0.0 || ped_v < 0.0 || veh_v < 0.0) return std::nullopt;
  const double t_ped = ped_dist / std::max(ped_v, eps_v);
  const double t_veh = veh_dist / std::max(veh_v, eps_v);
  return t_veh - t_ped;
}

/// Finite differences on the dt grid: speeds from successive positions,
/// accelerations from successive speeds, angular terms from wrapped heading
/// differences.
inline MetricSamples compute_metrics(std::span<const WorldState> states, double dt,
                                     const SceneGeometry& g = {}, double eps_v = 0.1) {
  if (states.size() < 3) throw ValidationError("metrics need at least 3 states");
  if (!(dt > 0.0)) throw ValidationError("metric dt must be positive");
  MetricSamples m;
  auto at = [&](Metric k) -> std::vector<double>& { return m[static_cast<std::size_t>(k)]; };
  const std::size_t n = states.size();
  std::vector<double> pv, vv, w;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const auto &a = states[i], &b = states[i + 1];
    pv.push_back(std::hypot(b.ped_x - a.ped_x, b.ped_y - a.ped_y) / dt);
    vv.push_back(std::hypot(b.veh_x - a.veh_x, b.veh_y - a.veh_y) / dt);
    w.push_back(wrap_angle(b.ped_heading - a.ped_heading) / dt);
  }
  at(Metric::PedSpeed) = pv;
  at(Metric::VehSpeed) = vv;
  at(Metric::PedAngularVelocity) = w;
  for (std::size_t i = 0; i + 1 < pv.size(); ++i) {
    at(Metric::PedAccel).push_back((pv[i + 1] - pv[i]) / dt);
    at(Metric::VehAccel).push_back((vv[i + 1] - vv[i]) / dt);
    at(Metric::PedAngularAccel).push_back((w[i + 1] - w[i]) / dt);
  }
  for (const auto& s : states) {
    at(Metric::Distance).push_back(std::hypot(s.ped_x - s.veh_x, s.ped_y - s.veh_y));
    at(Metric::PedX).push_back(s.ped_x);
    at(Metric::VehX).push_back(s.veh_x);
    at(Metric::PedY).push_back(s.ped_y);
    at(Metric::PedHeading).push_back(s.ped_heading);
    if (auto pet = projected_pet(s, g, eps_v)) at(Metric::Pet).push_back(*pet);
  }
  return m;
}

inline GaussianKde1D fit_metric_kde(std::span<const double> real_samples,
                                    double log_floor = GaussianKde1D::kDefaultLogFloor) {
  return GaussianKde1D::fit(real_samples, log_floor);
}

inline double kde_log_density(const GaussianKde1D& kde, double x) { return kde.log_density(x); }

/// One KDE per metric over real samples pooled across segments.
inline std::vector<GaussianKde1D> fit_real_kdes(const std::vector<MetricSamples>& real) {
  std::vector<GaussianKde1D> out;
  for (std::size_t k = 0; k < kNumMetrics; ++k) {
    std::vector<double> pooled;
    for (const auto& seg : real) pooled.insert(pooled.end(), seg[k].begin(), seg[k].end());
    if (pooled.empty())
      throw ValidationError("no real samples for metric '" + std::string(kMetricNames[k]) + "'");
    out.push_back(fit_metric_kde(pooled));
  }
  return out;
}

struct CompositeNll {
  double composite = 0.0;
  std::vector<std::optional<double>> per_metric;  // nullopt when excluded
  std::vector<std::string> warnings;
};

/// model[segment][metric] holds model samples; kdes[metric] the real-data
/// densities. Mean over samples per (metric, segment), then over segments,
/// then over metrics. Metrics with no model samples are excluded.
inline CompositeNll composite_nll(const std::vector<std::vector<std::vector<double>>>& model,
                                  const std::vector<GaussianKde1D>& kdes,
                                  const std::vector<std::string>& names = {}) {
  const std::size_t m = kdes.size();
  if (m == 0) throw ValidationError("composite NLL needs at least one metric");
  for (const auto& seg : model)
    if (seg.size() != m) throw ContractError("model metric catalog does not match the KDEs");
  CompositeNll out;
  out.per_metric.assign(m, std::nullopt);
  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t k = 0; k < m; ++k) {
    double seg_sum = 0.0;
    std::size_t seg_n = 0;
    for (const auto& seg : model) {
      if (seg[k].empty()) continue;
      double s = 0.0;
      for (double x : seg[k]) s -= kdes[k].log_density(x);
      seg_sum += s / static_cast<double>(seg[k].size());
      ++seg_n;
    }
    if (seg_n == 0) {
      const std::string name = k < names.size() ? names[k] : "metric " + std::to_string(k);
      out.warnings.push_back(name + ": no model samples; excluded from composite");
      continue;
    }
    out.per_metric[k] = seg_sum / static_cast<double>(seg_n);
    total += *out.per_metric[k];
    ++used;
  }
  if (used == 0) throw ValidationError("composite NLL: every metric lacks model samples");
  out.composite = total / static_cast<double>(used);
  return out;
}

inline CompositeNll composite_nll(const std::vector<MetricSamples>& model,
                                  const std::vector<GaussianKde1D>& kdes) {
  std::vector<std::vector<std::vector<double>>> m;
  m.reserve(model.size());
  for (const auto& seg : model) m.emplace_back(seg.begin(), seg.end());
  return composite_nll(m, kdes, std::vector<std::string>(kMetricNames.begin(), kMetricNames.end()));
}

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ValidationError("KS statistic needs non-empty samples");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size()), nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

struct DisplacementError {
  double ade = 0.0;
  double fde = 0.0;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

inline DisplacementError ade_fde(std::span<const Point2> model, std::span<const Point2> real) {
  if (model.size() != real.size()) throw ValidationError("ADE/FDE needs equal-length sequences");
  if (model.empty()) throw ValidationError("ADE/FDE needs at least one point");
  DisplacementError e;
  for (std::size_t i = 0; i < model.size(); ++i) {
    const double d = std::hypot(model[i].x - real[i].x, model[i].y - real[i].y);
    e.ade += d;
    if (i + 1 == model.size()) e.fde = d;
  }
  e.ade /= static_cast<double>(model.size());
  return e;
}

/// Per-agent ADE/FDE averaged over the pedestrian and the vehicle.
inline DisplacementError ade_fde(std::span<const WorldState> model, std::span<const WorldState> real) {
  if (model.size() != real.size()) throw ValidationError("ADE/FDE needs equal-length sequences");
  std::vector<Point2> mp, rp, mv, rv;
  for (std::size_t i = 0; i < model.size(); ++i) {
    mp.push_back({model[i].ped_x, model[i].ped_y});
    rp.push_back({real[i].ped_x, real[i].ped_y});
    mv.push_back({model[i].veh_x, model[i].veh_y});
    rv.push_back({real[i].veh_x, real[i].veh_y});
  }
  const auto p = ade_fde(std::span<const Point2>(mp), std::span<const Point2>(rp));
  const auto v = ade_fde(std::span<const Point2>(mv), std::span<const Point2>(rv));
  return {0.5 * (p.ade + v.ade), 0.5 * (p.fde + v.fde)};
}

}  // namespace crossim
