#pragma once

// Visual constraint stack: distance-dependent retinal noise, eccentricity
// dependent acuity, and constant-velocity Kalman tracking of the other agent.

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "crossim/core.hpp"
#include "crossim/world.hpp"

namespace crossim {

struct RetinalNoiseParams {
  double nu = 0.0;          // angular noise std (rad)
  double eye_height = 1.6;  // m

  static RetinalNoiseParams pedestrian(double nu) { return {nu, 1.6}; }
  static RetinalNoiseParams vehicle(double nu) { return {nu, 1.2}; }
};

/// Midget retinal ganglion cell density constants.
struct AcuityParams {
  double a_k = 0.9729;
  double r_2k = 1.084;      // deg
  double r_ek = 7.633;      // deg
  double d_gf0 = 33163.2;   // deg^-2
  double delta = 1e-5;
};

struct PerceptionConfig {
  double sigma_max = 50.0;          // saturation of the positional noise (m)
  double sigma_floor = 1e-3;        // lower bound on measurement noise fed to the filter (m)
  double process_accel_std = 0.5;   // white-acceleration process noise (m/s^2)
  double min_distance = 1e-2;       // inter-agent distance guard (m)
  double ped_speed_std0 = 0.3;      // initial speed uncertainty when observing a pedestrian
  double veh_speed_std0 = 2.0;      // initial speed uncertainty when observing a vehicle
  AcuityParams acuity{};
};

/// Longitudinal position noise std of the perceived other agent. Saturates at
/// `sigma_max` once the perturbed visual angle reaches the horizon.
inline double positional_noise_sigma(double d_l, double d, const RetinalNoiseParams& p,
                                     double sigma_max = 50.0) {
  require_finite(d_l, "longitudinal distance");
  require_finite(d, "inter-agent distance");
  if (d <= 0.0) throw DomainError("positional noise needs a positive inter-agent distance");
  if (p.nu < 0.0 || p.eye_height <= 0.0) throw DomainError("invalid retinal noise parameters");
  const double angle = std::atan(p.eye_height / d) + p.nu;
  if (angle >= 0.5 * std::numbers::pi) return sigma_max;
  const double sigma = std::abs(d_l) * (1.0 - p.eye_height / (d * std::tan(angle)));
  return std::min(std::max(sigma, 0.0), sigma_max);
}

inline double rgc_density(double eps_deg, const AcuityParams& a = {}) {
  const double e = std::abs(eps_deg);
  const double r = 1.0 + e / a.r_2k;
  return a.d_gf0 * (a.a_k / (r * r) + (1.0 - a.a_k) * std::exp(-e / a.r_ek));
}

/// Acuity relative to the fovea; 1 at zero eccentricity.
inline double relative_acuity(double eps_deg, const AcuityParams& a = {}) {
  return std::sqrt(rgc_density(eps_deg, a) / rgc_density(0.0, a));
}

inline double modulated_sigma(double sigma_x, double eps_deg, const AcuityParams& a = {}) {
  return sigma_x * (1.0 / relative_acuity(eps_deg, a) + a.delta);
}

struct KalmanBelief {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();        // (position, speed)
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();

  double pos() const { return mean(0); }
  double speed() const { return mean(1); }
  double pos_var() const { return covariance(0, 0); }
  double speed_var() const { return covariance(1, 1); }
};

inline bool is_psd(const Eigen::Matrix2d& p, double tol = 1e-12) {
  if (!p.allFinite()) return false;
  if (std::abs(p(0, 1) - p(1, 0)) > tol * (1.0 + p.cwiseAbs().maxCoeff())) return false;
  return p(0, 0) >= -tol && p(1, 1) >= -tol && p.determinant() >= -tol * (1.0 + p.squaredNorm());
}

inline KalmanBelief kalman_init(double true_pos, double true_speed, double sigma_pos0,
                                double sigma_speed0, Rng& rng) {
  if (sigma_pos0 < 0.0 || sigma_speed0 < 0.0) throw ValidationError("negative initial sigma");
  KalmanBelief b;
  b.mean << normal(rng, true_pos, sigma_pos0), normal(rng, true_speed, sigma_speed0);
  b.covariance << sigma_pos0 * sigma_pos0, 0.0, 0.0, sigma_speed0 * sigma_speed0;
  return b;
}

/// Predict with a constant-velocity model, then correct on a position
/// measurement. The covariance update uses the Joseph form.
inline KalmanBelief kalman_update(const KalmanBelief& prior, double obs_pos, double sigma_obs,
                                  double dt, double process_accel_std) {
  if (!is_psd(prior.covariance)) throw ValidationError("Kalman prior covariance is not PSD");
  if (!(sigma_obs > 0.0)) throw ValidationError("measurement noise must be positive");
  if (!(dt > 0.0)) throw ValidationError("dt must be positive");
  require_finite(obs_pos, "observation");

  Eigen::Matrix2d f;
  f << 1.0, dt, 0.0, 1.0;
  const double q = process_accel_std * process_accel_std;
  Eigen::Matrix2d qm;
  qm << 0.25 * dt * dt * dt * dt, 0.5 * dt * dt * dt, 0.5 * dt * dt * dt, dt * dt;
  qm *= q;

  const Eigen::Vector2d x_pred = f * prior.mean;
  const Eigen::Matrix2d p_pred = f * prior.covariance * f.transpose() + qm;

  const Eigen::RowVector2d h(1.0, 0.0);
  const double r = sigma_obs * sigma_obs;
  const double s = p_pred(0, 0) + r;
  const Eigen::Vector2d k = p_pred.col(0) / s;
  const double innovation = obs_pos - x_pred(0);

  KalmanBelief post;
  post.mean = x_pred + k * innovation;
  const Eigen::Matrix2d a = Eigen::Matrix2d::Identity() - k * h;
  post.covariance = a * p_pred * a.transpose() + (k * k.transpose()) * r;
  post.covariance = 0.5 * (post.covariance + post.covariance.transpose());
  return post;
}

/// Eccentricity (deg) of the vehicle relative to the pedestrian's gaze line.
inline double gaze_eccentricity_deg(const WorldState& s) {
  const double gaze = s.ped_heading + s.gaze_offset;
  const double bearing = std::atan2(s.veh_x - s.ped_x, s.veh_y - s.ped_y);
  return std::abs(rad_to_deg(wrap_angle(bearing - gaze)));
}

/// Position of the other agent along its travel axis: vehicle x for a
/// pedestrian observer, pedestrian y for a vehicle observer.
inline double other_longitudinal_position(const WorldState& s, AgentKind observer) {
  return observer == AgentKind::Pedestrian ? s.veh_x : s.ped_y;
}

inline double other_longitudinal_speed(const WorldState& s, AgentKind observer) {
  return observer == AgentKind::Pedestrian ? s.veh_speed
                                           : s.ped_speed * std::cos(s.ped_heading);
}

/// Noise std of the observer's measurement of the other agent. Acuity
/// modulation applies to the pedestrian observer only.
inline double observation_sigma(const WorldState& s, const SceneGeometry& g, AgentKind observer,
                                double gaze_eps_deg, const RetinalNoiseParams& noise,
                                const PerceptionConfig& cfg = {}) {
  const double d_l = observer == AgentKind::Pedestrian ? s.veh_x - g.crossing_x
                                                       : s.ped_y - g.crossing_y;
  const double d = std::max(std::hypot(s.veh_x - s.ped_x, s.veh_y - s.ped_y), cfg.min_distance);
  double sigma = positional_noise_sigma(d_l, d, noise, cfg.sigma_max);
  if (observer == AgentKind::Pedestrian) {
    sigma = std::min(modulated_sigma(sigma, gaze_eps_deg, cfg.acuity), cfg.sigma_max);
  }
  return sigma;
}

/// Noisy longitudinal position measurement of the other agent. Only valid for
/// the visual variants; NC and MC read the true state instead.
inline double observe_other(const WorldState& s, const SceneGeometry& g, AgentKind observer,
                            double gaze_eps_deg, const RetinalNoiseParams& noise, Variant variant,
                            Rng& rng, const PerceptionConfig& cfg = {}) {
  if (!has_visual(variant)) throw ContractError("observe_other called for a non-visual variant");
  const double sigma = observation_sigma(s, g, observer, gaze_eps_deg, noise, cfg);
  return other_longitudinal_position(s, observer) + normal(rng, 0.0, sigma);
}

}  // namespace crossim
