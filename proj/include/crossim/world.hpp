#pragma once

// Ground-truth crossing environment.
//
// Frame: crossing point at the origin, the vehicle drives along +x at a fixed
// y, the pedestrian crosses along +y. Pedestrian heading is a yaw with 0 along
// +y and positive angles turning clockwise toward +x, so the walking velocity
// is (v sin(theta), v cos(theta)).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "crossim/core.hpp"
#include "crossim/kde.hpp"

namespace crossim {

struct WorldState {
  double t = 0.0;
  double ped_x = 0.0;
  double ped_y = 0.0;
  double ped_speed = 0.0;
  double ped_heading = 0.0;
  double gaze_offset = 0.0;
  double veh_x = 0.0;
  double veh_y = 0.0;
  double veh_speed = 0.0;
  double veh_accel = 0.0;

  bool operator==(const WorldState&) const = default;
};

struct SceneGeometry {
  double crossing_x = 0.0;
  double crossing_y = 0.0;
  double lane_half_width = 1.75;
  double crossing_half_width_x = 2.0;
  double kerb_y = -1.75;
  double ped_goal_y = 1.75;
  double veh_goal_x = 3.0;
  double veh_lane_y = 0.0;
  double yield_zone_x_extent = 5.0;
  double yield_ped_x_tol = 2.0;
  double yield_ped_y_tol = 3.0;
  double ped_radius = 0.3;
  double veh_length = 4.5;
  double veh_width = 1.8;
  double max_episode_time = 30.0;
  // Approach zones used by the data pipeline and the initial-state sampler.
  double ped_zone_half_x = 20.0;
  double ped_zone_kerb_depth = 5.0;
  double ped_truncate_half_x = 10.0;
  double veh_zone_upstream = 25.0;
  double veh_zone_downstream = 25.0;
  double refuge_depth = 2.0;

  void validate() const {
    const double positive[] = {lane_half_width,     crossing_half_width_x, yield_zone_x_extent,
                               yield_ped_x_tol,     yield_ped_y_tol,       ped_radius,
                               veh_length,          veh_width,             max_episode_time,
                               ped_zone_half_x,     ped_zone_kerb_depth,   ped_truncate_half_x,
                               veh_zone_upstream,   veh_zone_downstream,   refuge_depth};
    for (double v : positive) {
      require_finite(v, "scene extent");
      if (v <= 0.0) throw ValidationError("scene extents must be strictly positive");
    }
    if (!(ped_goal_y > kerb_y)) throw ValidationError("ped_goal_y must exceed kerb_y");
    if (!(veh_goal_x > crossing_x)) throw ValidationError("veh_goal_x must lie beyond the crossing");
  }
};

enum class OutcomeKind { Collision, BothArrived, Timeout };

inline std::string_view to_string(OutcomeKind k) {
  switch (k) {
    case OutcomeKind::Collision: return "collision";
    case OutcomeKind::BothArrived: return "both_arrived";
    case OutcomeKind::Timeout: return "timeout";
  }
  return "?";
}

struct EpisodeOutcome {
  OutcomeKind kind = OutcomeKind::Timeout;
  double t_end = 0.0;
  std::optional<double> ped_arrived_at;
  std::optional<double> veh_arrived_at;
};

/// First time each agent satisfied its goal condition.
struct ArrivalLog {
  std::optional<double> ped;
  std::optional<double> veh;
};

inline void validate_state(const WorldState& s) {
  require_finite(s.t, "t");
  require_finite(s.ped_x, "ped_x");
  require_finite(s.ped_y, "ped_y");
  require_finite(s.ped_speed, "ped_speed");
  require_finite(s.ped_heading, "ped_heading");
  require_finite(s.gaze_offset, "gaze_offset");
  require_finite(s.veh_x, "veh_x");
  require_finite(s.veh_y, "veh_y");
  require_finite(s.veh_speed, "veh_speed");
  require_finite(s.veh_accel, "veh_accel");
}

/// Advance the world by one step. `ped_speed` and `veh_accel` are the values
/// left after motor constraints. The clock is recomputed as step_index * dt
/// by callers that track an integer step count; here t simply gains dt.
inline WorldState step_world(const WorldState& s, double ped_speed, double ped_heading,
                             double veh_accel, double dt) {
  validate_state(s);
  require_finite(ped_speed, "pedestrian speed command");
  require_finite(ped_heading, "pedestrian heading");
  require_finite(veh_accel, "vehicle acceleration");
  require_finite(dt, "dt");
  if (dt <= 0.0) throw ValidationError("dt must be positive");

  WorldState n = s;
  n.ped_speed = ped_speed;
  n.ped_heading = ped_heading;
  n.ped_x = s.ped_x + ped_speed * std::sin(ped_heading) * dt;
  n.ped_y = s.ped_y + ped_speed * std::cos(ped_heading) * dt;

  // Semi-implicit Euler; a stopped vehicle never reverses.
  n.veh_accel = veh_accel;
  n.veh_speed = std::max(0.0, s.veh_speed + veh_accel * dt);
  n.veh_x = s.veh_x + n.veh_speed * dt;
  n.t = s.t + dt;
  return n;
}

/// Closed test: touching counts as a collision.
inline bool check_collision(const WorldState& s, const SceneGeometry& g) {
  const double hx = 0.5 * g.veh_length;
  const double hy = 0.5 * g.veh_width;
  const double cx = std::clamp(s.ped_x, s.veh_x - hx, s.veh_x + hx);
  const double cy = std::clamp(s.ped_y, s.veh_y - hy, s.veh_y + hy);
  const double dx = s.ped_x - cx;
  const double dy = s.ped_y - cy;
  return dx * dx + dy * dy <= g.ped_radius * g.ped_radius;
}

inline bool ped_at_goal(const WorldState& s, const SceneGeometry& g) {
  return s.ped_y >= g.ped_goal_y;
}

inline bool veh_at_goal(const WorldState& s, const SceneGeometry& g) {
  return s.veh_x >= g.veh_goal_x;
}

inline std::optional<EpisodeOutcome> check_termination(const WorldState& s,
                                                       const SceneGeometry& g, bool collision,
                                                       ArrivalLog& log) {
  if (!log.ped && ped_at_goal(s, g)) log.ped = s.t;
  if (!log.veh && veh_at_goal(s, g)) log.veh = s.t;
  EpisodeOutcome out{OutcomeKind::Timeout, s.t, log.ped, log.veh};
  if (collision) {
    out.kind = OutcomeKind::Collision;
    return out;
  }
  if (log.ped && log.veh) {
    out.kind = OutcomeKind::BothArrived;
    return out;
  }
  // 1e-9 absorbs the rounding in step_index * dt.
  if (s.t >= g.max_episode_time - 1e-9) return out;
  return std::nullopt;
}

/// Non-yield trigger region: vehicle within the zone before the crossing and
/// pedestrian inside the tolerance box around the crossing near the kerb.
inline bool in_yield_trigger_zone(const WorldState& s, const SceneGeometry& g) {
  const double before = g.crossing_x - s.veh_x;
  const bool veh_in = before >= 0.0 && before <= g.yield_zone_x_extent;
  const bool ped_in = std::abs(s.ped_x - g.crossing_x) <= g.yield_ped_x_tol &&
                      std::abs(s.ped_y - g.kerb_y) <= g.yield_ped_y_tol;
  return veh_in && ped_in;
}

/// Pedestrian on the carriageway but outside the crosswalk.
inline bool ped_offroad(const WorldState& s, const SceneGeometry& g) {
  const bool on_carriageway = s.ped_y > g.kerb_y && s.ped_y < g.ped_goal_y;
  return on_carriageway && std::abs(s.ped_x - g.crossing_x) > g.crossing_half_width_x;
}

/// Heading from the pedestrian toward the far end of the crosswalk.
inline double heading_toward_crossing(double ped_x, double ped_y, const SceneGeometry& g) {
  return std::atan2(g.crossing_x - ped_x, g.ped_goal_y - ped_y);
}

/// Joint density over (ped_x, ped_y, ped_speed, veh_x, veh_speed).
using InitialConditionModel = ProductKde;

struct InitialStateBounds {
  double ped_speed_max = 3.0;
  double veh_speed_max = 15.0;
  int max_attempts = 1000;
};

inline bool initial_state_in_bounds(const WorldState& s, const SceneGeometry& g,
                                    const InitialStateBounds& b = {}) {
  return s.ped_speed >= 0.0 && s.ped_speed <= b.ped_speed_max && s.veh_speed >= 0.0 &&
         s.veh_speed <= b.veh_speed_max &&
         std::abs(s.ped_x - g.crossing_x) <= g.ped_zone_half_x &&
         s.ped_y >= g.kerb_y - g.ped_zone_kerb_depth && s.ped_y < g.ped_goal_y &&
         s.veh_x >= g.crossing_x - g.veh_zone_upstream && s.veh_x < g.veh_goal_x;
}

inline WorldState sample_initial_state(const InitialConditionModel& kde, const SceneGeometry& g,
                                       Rng& rng, const InitialStateBounds& b = {}) {
  if (kde.dims() != 5) throw ContractError("initial-condition KDE must be 5-dimensional");
  for (int attempt = 0; attempt < b.max_attempts; ++attempt) {
    const auto v = kde.sample(rng);
    WorldState s;
    s.ped_x = v[0];
    s.ped_y = v[1];
    s.ped_speed = v[2];
    s.veh_x = v[3];
    s.veh_speed = v[4];
    s.veh_y = g.veh_lane_y;
    s.ped_heading = heading_toward_crossing(s.ped_x, s.ped_y, g);
    if (initial_state_in_bounds(s, g, b)) return s;
  }
  throw DomainError("initial-condition KDE produced no in-bounds state after " +
                    std::to_string(b.max_attempts) + " draws");
}

}  // namespace crossim
