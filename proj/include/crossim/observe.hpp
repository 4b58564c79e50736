#pragma once

// Observation builders. Every feature is min-max scaled into [0, 1] and
// clipped; the feature list is a pure function of (agent, variant).

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "crossim/motor.hpp"
#include "crossim/params.hpp"
#include "crossim/perception.hpp"
#include "crossim/world.hpp"

namespace crossim {

struct Feature {
  std::string name;
  double min = 0.0;
  double max = 1.0;
  bool log1p = false;  // applied to the raw value before scaling (bounds are post-transform)

  double normalize(double raw) const {
    const double v = log1p ? std::log1p(std::max(raw, 0.0)) : raw;
    return std::clamp((v - min) / (max - min), 0.0, 1.0);
  }
};

struct ObservationLayout {
  AgentKind agent = AgentKind::Pedestrian;
  Variant variant = Variant::NC;
  std::vector<Feature> features;

  std::size_t size() const { return features.size(); }
};

struct ObservationBounds {
  double t_max = 30.0;
  double x_min = -25.0, x_max = 25.0;
  double y_min = -6.75, y_max = 6.75;
  double ped_speed_max = 3.0;
  double ped_axis_speed_min = -3.0;
  double veh_speed_max = 15.0;
  double accel_min = -5.0, accel_max = 3.0;
  double sigma_max = 50.0;
  double step_time_max = step_duration(0.0);
};

namespace detail {

inline Feature angle_feature(std::string name) {
  return {std::move(name), -std::numbers::pi, std::numbers::pi, false};
}

inline Feature variance_feature(std::string name, double sigma_max) {
  return {std::move(name), 0.0, std::log1p(sigma_max * sigma_max), true};
}

inline Feature range_feature(std::string name, const Range& r) {
  return {std::move(name), r.lo, r.hi, false};
}

}  // namespace detail

inline ObservationLayout ped_layout(Variant v, const ObservationBounds& b = {}) {
  using R = ParamRanges;
  ObservationLayout l{AgentKind::Pedestrian, v, {}};
  auto& f = l.features;
  f.push_back({"t", 0.0, b.t_max});
  f.push_back({"ped_x", b.x_min, b.x_max});
  f.push_back({"ped_y", b.y_min, b.y_max});
  f.push_back({"ped_speed", 0.0, b.ped_speed_max});
  f.push_back(detail::angle_feature("ped_heading"));
  if (has_visual(v)) f.push_back(detail::angle_feature("gaze_offset"));
  f.push_back({"veh_x", b.x_min, b.x_max});
  f.push_back({"veh_speed", 0.0, b.veh_speed_max});
  if (has_visual(v)) {
    f.push_back(detail::variance_feature("veh_pos_var", b.sigma_max));
    f.push_back(detail::variance_feature("veh_speed_var", b.sigma_max));
  }
  if (has_motor(v)) f.push_back({"step_remaining", 0.0, b.step_time_max});
  f.push_back(detail::range_feature("own_nu_ped", R::nu_mu));
  f.push_back(detail::range_feature("own_w_ped", R::w_ped_mu));
  f.push_back(detail::range_feature("veh_mu_nu", R::nu_mu));
  f.push_back(detail::range_feature("veh_sigma_nu", R::nu_sigma));
  f.push_back(detail::range_feature("veh_mu_w", R::w_veh_mu));
  f.push_back(detail::range_feature("veh_sigma_w", R::w_veh_sigma));
  return l;
}

inline ObservationLayout veh_layout(Variant v, const ObservationBounds& b = {}) {
  using R = ParamRanges;
  ObservationLayout l{AgentKind::Vehicle, v, {}};
  auto& f = l.features;
  f.push_back({"t", 0.0, b.t_max});
  f.push_back({"veh_x", b.x_min, b.x_max});
  f.push_back({"veh_speed", 0.0, b.veh_speed_max});
  f.push_back({"veh_accel", b.accel_min, b.accel_max});
  if (has_motor(v)) f.push_back({"veh_target_accel", b.accel_min, b.accel_max});
  f.push_back({"ped_x", b.x_min, b.x_max});
  f.push_back({"ped_y", b.y_min, b.y_max});
  f.push_back({"ped_axis_speed", b.ped_axis_speed_min, b.ped_speed_max});
  f.push_back(detail::angle_feature("ped_heading"));
  if (has_visual(v)) {
    f.push_back(detail::variance_feature("ped_pos_var", b.sigma_max));
    f.push_back(detail::variance_feature("ped_speed_var", b.sigma_max));
  }
  f.push_back(detail::range_feature("own_nu_veh", R::nu_mu));
  f.push_back(detail::range_feature("own_w_veh", R::w_veh_mu));
  f.push_back(detail::range_feature("ped_mu_nu", R::nu_mu));
  f.push_back(detail::range_feature("ped_sigma_nu", R::nu_sigma));
  f.push_back(detail::range_feature("ped_mu_w", R::w_ped_mu));
  f.push_back(detail::range_feature("ped_sigma_w", R::w_ped_sigma));
  return l;
}

inline ObservationLayout layout_for(AgentKind agent, Variant v, const ObservationBounds& b = {}) {
  return agent == AgentKind::Pedestrian ? ped_layout(v, b) : veh_layout(v, b);
}

namespace detail {

inline std::vector<double> normalize_all(const ObservationLayout& l,
                                         const std::vector<double>& raw) {
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = l.features[i].normalize(raw[i]);
  return out;
}

}  // namespace detail

/// Unscaled pedestrian features in layout order.
inline std::vector<double> raw_ped_observation(const WorldState& s,
                                               const std::optional<KalmanBelief>& belief,
                                               const std::optional<StepState>& step,
                                               const NonPolicyParams& own,
                                               const PopulationSpec& other_pop, Variant v) {
  if (has_visual(v) != belief.has_value())
    throw ContractError("pedestrian observation: belief required iff the variant is visual");
  if (has_motor(v) != step.has_value())
    throw ContractError("pedestrian observation: step state required iff the variant is motor");
  std::vector<double> r = {s.t, s.ped_x, s.ped_y, s.ped_speed, s.ped_heading};
  if (has_visual(v)) {
    r.push_back(s.gaze_offset);
    r.push_back(belief->pos());
    r.push_back(belief->speed());
    r.push_back(belief->pos_var());
    r.push_back(belief->speed_var());
  } else {
    r.push_back(s.veh_x);
    r.push_back(s.veh_speed);
  }
  if (has_motor(v)) r.push_back(step->remaining);
  r.insert(r.end(), {own.nu_ped, own.w_ped, other_pop.nu_veh.mu, other_pop.nu_veh.sigma,
                     other_pop.w_veh.mu, other_pop.w_veh.sigma});
  return r;
}

inline std::vector<double> build_ped_observation(const WorldState& s,
                                                 const std::optional<KalmanBelief>& belief,
                                                 const std::optional<StepState>& step,
                                                 const NonPolicyParams& own,
                                                 const PopulationSpec& other_pop, Variant v,
                                                 const ObservationBounds& b = {}) {
  return detail::normalize_all(ped_layout(v, b),
                               raw_ped_observation(s, belief, step, own, other_pop, v));
}

inline std::vector<double> raw_veh_observation(const WorldState& s,
                                               const std::optional<KalmanBelief>& belief,
                                               std::optional<double> target_accel,
                                               const NonPolicyParams& own,
                                               const PopulationSpec& other_pop, Variant v) {
  if (has_visual(v) != belief.has_value())
    throw ContractError("vehicle observation: belief required iff the variant is visual");
  if (has_motor(v) && !target_accel.has_value())
    throw ContractError("vehicle observation: motor variants need the target acceleration");
  std::vector<double> r = {s.t, s.veh_x, s.veh_speed, s.veh_accel};
  if (has_motor(v)) r.push_back(*target_accel);
  r.push_back(s.ped_x);
  if (has_visual(v)) {
    r.push_back(belief->pos());
    r.push_back(belief->speed());
  } else {
    r.push_back(s.ped_y);
    r.push_back(other_longitudinal_speed(s, AgentKind::Vehicle));
  }
  r.push_back(s.ped_heading);
  if (has_visual(v)) {
    r.push_back(belief->pos_var());
    r.push_back(belief->speed_var());
  }
  r.insert(r.end(), {own.nu_veh, own.w_veh, other_pop.nu_ped.mu, other_pop.nu_ped.sigma,
                     other_pop.w_ped.mu, other_pop.w_ped.sigma});
  return r;
}

inline std::vector<double> build_veh_observation(const WorldState& s,
                                                 const std::optional<KalmanBelief>& belief,
                                                 std::optional<double> target_accel,
                                                 const NonPolicyParams& own,
                                                 const PopulationSpec& other_pop, Variant v,
                                                 const ObservationBounds& b = {}) {
  return detail::normalize_all(veh_layout(v, b),
                               raw_veh_observation(s, belief, target_accel, own, other_pop, v));
}

}  // namespace crossim
