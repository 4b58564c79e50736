#pragma once

// Motor constraints: ballistic gait steps, per-step walking effort and
// low-pass smoothing of the driver's acceleration.

#include <algorithm>
#include <cmath>

#include "crossim/core.hpp"

namespace crossim {

struct GaitParams {
  double leg_length = 0.9;  // m
  double min_speed = 0.1;   // m/s, floor for the step-duration power law
};

struct StepState {
  double remaining = 0.0;
  double step_accel = 0.0;
  double commanded_speed = 0.0;
  double step_duration = 1.0;

  bool active() const { return remaining > kCompletionEps; }

  static constexpr double kCompletionEps = 1e-9;
};

/// Walking step duration, T = v^-0.58 with v floored at `min_speed`.
inline double step_duration(double v, double min_speed = GaitParams{}.min_speed) {
  return std::pow(std::max(v, min_speed), -0.58);
}

/// Step length from the gait power law, s = v^0.42.
inline double step_length(double v, double min_speed = GaitParams{}.min_speed) {
  return std::pow(std::max(v, min_speed), 0.42);
}

/// Duration is evaluated at the commanded speed so that starting from rest
/// still yields a finite step.
inline StepState begin_step(double v_prev, double v_cmd, const GaitParams& gait = {}) {
  if (v_prev < 0.0 || v_cmd < 0.0) throw ValidationError("walking speeds must be non-negative");
  StepState s;
  s.step_duration = step_duration(v_cmd, gait.min_speed);
  s.step_accel = (v_cmd - v_prev) / s.step_duration;
  s.commanded_speed = v_cmd;
  s.remaining = s.step_duration;
  return s;
}

struct StepAdvance {
  StepState step;
  double v_next = 0.0;
  bool completed = false;
};

/// Integrate the latched step acceleration over min(dt, remaining). On
/// completion the speed lands exactly on the commanded value.
inline StepAdvance advance_step(const StepState& step, double v_current, double dt) {
  StepAdvance out;
  out.step = step;
  const double h = std::min(dt, step.remaining);
  out.v_next = std::max(0.0, v_current + step.step_accel * h);
  out.step.remaining = std::max(0.0, step.remaining - dt);
  if (out.step.remaining <= StepState::kCompletionEps) {
    out.step.remaining = 0.0;
    out.completed = true;
    out.v_next = step.commanded_speed;
  }
  return out;
}

/// Per-unit-mass work to change walking speed across one step,
/// U = (v- cos 2theta - v+)^2 / (2 sin^2 2theta).
inline double walking_effort(double v_minus, double v_plus, double two_theta) {
  const double s = std::sin(two_theta);
  if (std::abs(s) < 1e-12) throw DomainError("walking effort undefined for a degenerate leg angle");
  const double num = v_minus * std::cos(two_theta) - v_plus;
  return num * num / (2.0 * s * s);
}

inline double effort_penalty(double effort, double w_ped) {
  if (effort < 0.0 || w_ped < 0.0) throw ValidationError("effort and its weight must be >= 0");
  return -w_ped * effort;
}

/// Inter-leg angle from step length and leg length (chord of two legs).
inline double inter_leg_angle(double v, const GaitParams& gait = {}) {
  if (v < 0.0 || gait.leg_length <= 0.0) throw ValidationError("invalid gait inputs");
  const double s = step_length(v, gait.min_speed);
  return 2.0 * std::asin(std::clamp(s / (2.0 * gait.leg_length), 0.0, 0.999));
}

/// First-order low-pass step toward the target acceleration.
inline double smooth_accel(double a_prev, double a_target, double w_veh) {
  const double w = std::max(w_veh, 1.0);
  return a_prev + (a_target - a_prev) / w;
}

}  // namespace crossim
