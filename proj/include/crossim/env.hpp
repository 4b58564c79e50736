#pragma once

// Two-agent crossing environment for one model variant, and closed-loop
// rollouts of a policy pair.
//
// Cadence: both agents act every dt. In motor variants the pedestrian's
// speed command only latches when a gait step starts; heading and gaze
// update every dt.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "crossim/motor.hpp"
#include "crossim/observe.hpp"
#include "crossim/params.hpp"
#include "crossim/perception.hpp"
#include "crossim/policy.hpp"
#include "crossim/rewards.hpp"
#include "crossim/world.hpp"

namespace crossim {

struct EnvConfig {
  Variant variant = Variant::NC;
  SceneGeometry geom{};
  double dt = 0.1;
  PerceptionConfig perception{};
  GaitParams gait{};
  RewardConstants rewards{};
  ObservationBounds obs_bounds{};

  void validate() const {
    geom.validate();
    require_finite(dt, "dt");
    if (dt <= 0.0) throw ValidationError("dt must be positive");
  }
};

/// Per-step diagnostics kept by rollouts.
struct StepRecord {
  std::vector<double> ped_action;
  std::vector<double> veh_action;
  double veh_target_accel = 0.0;
  double veh_applied_accel = 0.0;
  double gaze_eccentricity_deg = 0.0;
  bool gait_step_started = false;
  double walk_penalty = 0.0;
  RewardBreakdown reward;
  std::optional<KalmanBelief> ped_belief;  // pedestrian's belief about the vehicle
  std::optional<KalmanBelief> veh_belief;  // vehicle's belief about the pedestrian
};

struct StepResult {
  RewardBreakdown reward;
  bool ped_terminal = false;  // agent reached its goal or collided this step
  bool veh_terminal = false;
  bool episode_done = false;
  std::optional<EpisodeOutcome> outcome;
  StepRecord record;
};

class CrossingEnv {
 public:
  explicit CrossingEnv(EnvConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    ped_layout_ = ped_layout(cfg_.variant, cfg_.obs_bounds);
    veh_layout_ = veh_layout(cfg_.variant, cfg_.obs_bounds);
  }

  const EnvConfig& config() const { return cfg_; }
  Variant variant() const { return cfg_.variant; }
  const ObservationLayout& ped_obs_layout() const { return ped_layout_; }
  const ObservationLayout& veh_obs_layout() const { return veh_layout_; }

  void reset(const WorldState& init, const PopulationSpec& population,
             const NonPolicyParams& params, Rng& rng) {
    validate_state(init);
    state_ = init;
    state_.veh_y = init.veh_y;
    step_index_ = static_cast<std::int64_t>(std::llround(init.t / cfg_.dt));
    state_.t = static_cast<double>(step_index_) * cfg_.dt;
    if (!has_visual(cfg_.variant)) state_.gaze_offset = 0.0;
    population_ = population;
    params_ = params;
    flags_ = {};
    arrivals_ = {};
    outcome_.reset();
    done_ = false;
    step_ = StepState{};
    target_accel_ = state_.veh_accel;
    veh_in_yield_zone_ = veh_in_yield_x(state_);
    ped_belief_.reset();
    veh_belief_.reset();
    if (has_visual(cfg_.variant)) {
      const auto& pc = cfg_.perception;
      const double sp = observation_sigma(state_, cfg_.geom, AgentKind::Pedestrian,
                                          gaze_eccentricity_deg(state_),
                                          RetinalNoiseParams::pedestrian(params_.nu_ped), pc);
      ped_belief_ = kalman_init(other_longitudinal_position(state_, AgentKind::Pedestrian),
                                other_longitudinal_speed(state_, AgentKind::Pedestrian), sp,
                                pc.veh_speed_std0, rng);
      const double sv = observation_sigma(state_, cfg_.geom, AgentKind::Vehicle, 0.0,
                                          RetinalNoiseParams::vehicle(params_.nu_veh), pc);
      veh_belief_ = kalman_init(other_longitudinal_position(state_, AgentKind::Vehicle),
                                other_longitudinal_speed(state_, AgentKind::Vehicle), sv,
                                pc.ped_speed_std0, rng);
    }
    // An episode can start with an agent already past its goal.
    if (ped_at_goal(state_, cfg_.geom)) {
      flags_.ped_arrived = true;
      arrivals_.ped = state_.t;
    }
    if (veh_at_goal(state_, cfg_.geom)) {
      flags_.veh_arrived = true;
      arrivals_.veh = state_.t;
    }
  }

  std::vector<double> ped_observation() const {
    return build_ped_observation(state_, ped_belief_, motor_step(), params_, population_,
                                 cfg_.variant, cfg_.obs_bounds);
  }

  std::vector<double> veh_observation() const {
    return build_veh_observation(state_, veh_belief_, target_accel_, params_, population_,
                                 cfg_.variant, cfg_.obs_bounds);
  }

  StepResult step(std::span<const double> ped_action, std::span<const double> veh_action,
                  Rng& rng) {
    if (done_) throw ContractError("step called on a finished episode");
    const auto ped_spec = ped_action_spec(cfg_.variant);
    if (ped_action.size() != ped_spec.size() || veh_action.size() != 1)
      throw ContractError("action width does not match the variant's action spec");
    for (double a : ped_action) require_finite(a, "pedestrian action");
    require_finite(veh_action[0], "vehicle action");

    StepResult res;
    auto& rec = res.record;
    rec.ped_action.assign(ped_action.begin(), ped_action.end());
    rec.veh_action.assign(veh_action.begin(), veh_action.end());

    const bool ped_was_done = flags_.ped_done();
    const bool veh_was_done = flags_.veh_done();

    // Pedestrian.
    double heading = state_.ped_heading;
    double gaze = has_visual(cfg_.variant) ? state_.gaze_offset : 0.0;
    double ped_speed = state_.ped_speed;
    double walk_penalty = 0.0;
    if (!ped_was_done) {
      const double v_cmd = ped_spec.dims[0].range.clamp(ped_action[0]);
      heading = wrap_angle(heading + ped_spec.dims[1].range.clamp(ped_action[1]));
      if (has_visual(cfg_.variant)) gaze = ped_spec.dims[2].range.clamp(ped_action[2]);
      if (has_motor(cfg_.variant)) {
        if (!step_.active()) {
          step_ = begin_step(state_.ped_speed, v_cmd, cfg_.gait);
          const double effort = walking_effort(state_.ped_speed, v_cmd,
                                               inter_leg_angle(v_cmd, cfg_.gait));
          walk_penalty = effort_penalty(effort, params_.w_ped);
          rec.gait_step_started = true;
        }
        const auto adv = advance_step(step_, state_.ped_speed, cfg_.dt);
        step_ = adv.step;
        ped_speed = adv.v_next;
      } else {
        ped_speed = v_cmd;
      }
    }

    // Vehicle.
    double accel = 0.0;
    target_accel_ = veh_action_spec(cfg_.variant).dims[0].range.clamp(veh_action[0]);
    if (!veh_was_done) {
      accel = has_motor(cfg_.variant) ? smooth_accel(state_.veh_accel, target_accel_, params_.w_veh)
                                      : target_accel_;
    }
    rec.veh_target_accel = target_accel_;
    rec.veh_applied_accel = accel;
    rec.walk_penalty = walk_penalty;

    const WorldState prev = state_;
    state_ = step_world(prev, ped_speed, heading, accel, cfg_.dt);
    ++step_index_;
    state_.t = static_cast<double>(step_index_) * cfg_.dt;
    state_.gaze_offset = gaze;

    const bool collided = check_collision(state_, cfg_.geom);
    const bool veh_in_zone = veh_in_yield_x(state_);
    const bool entered = veh_in_zone && !veh_in_yield_zone_;
    veh_in_yield_zone_ = veh_in_zone;
    const bool violation = entered && in_yield_trigger_zone(state_, cfg_.geom);

    outcome_ = check_termination(state_, cfg_.geom, collided, arrivals_);
    const bool ped_arrived_now = !ped_was_done && ped_at_goal(state_, cfg_.geom);
    const bool veh_arrived_now = !veh_was_done && veh_at_goal(state_, cfg_.geom);

    res.reward.ped = ped_step_reward(state_, state_.ped_y - prev.ped_y, walk_penalty,
                                     ped_offroad(state_, cfg_.geom), collided, ped_arrived_now,
                                     flags_, cfg_.rewards);
    res.reward.veh = veh_step_reward(state_, violation, collided, veh_arrived_now, flags_,
                                     cfg_.rewards);
    res.ped_terminal = !ped_was_done && flags_.ped_done();
    res.veh_terminal = !veh_was_done && flags_.veh_done();

    if (has_visual(cfg_.variant)) update_beliefs(rng);
    rec.gaze_eccentricity_deg = gaze_eccentricity_deg(state_);
    rec.ped_belief = ped_belief_;
    rec.veh_belief = veh_belief_;
    rec.reward = res.reward;

    if (outcome_) {
      done_ = true;
      res.episode_done = true;
      res.outcome = outcome_;
    }
    return res;
  }

  const WorldState& state() const { return state_; }
  bool done() const { return done_; }
  const std::optional<EpisodeOutcome>& outcome() const { return outcome_; }
  const RewardFlags& flags() const { return flags_; }
  const NonPolicyParams& params() const { return params_; }
  const PopulationSpec& population() const { return population_; }
  const std::optional<KalmanBelief>& ped_belief() const { return ped_belief_; }
  const std::optional<KalmanBelief>& veh_belief() const { return veh_belief_; }
  const StepState& gait_step() const { return step_; }
  double target_accel() const { return target_accel_; }

 private:
  std::optional<StepState> motor_step() const {
    if (has_motor(cfg_.variant)) return step_;
    return std::nullopt;
  }

  bool veh_in_yield_x(const WorldState& s) const {
    const double before = cfg_.geom.crossing_x - s.veh_x;
    return before >= 0.0 && before <= cfg_.geom.yield_zone_x_extent;
  }

  void update_beliefs(Rng& rng) {
    const auto& pc = cfg_.perception;
    const double eps = gaze_eccentricity_deg(state_);
    const auto ped_noise = RetinalNoiseParams::pedestrian(params_.nu_ped);
    const double sp = observation_sigma(state_, cfg_.geom, AgentKind::Pedestrian, eps, ped_noise, pc);
    const double zp = other_longitudinal_position(state_, AgentKind::Pedestrian) + normal(rng, 0.0, sp);
    ped_belief_ = kalman_update(*ped_belief_, zp, std::max(sp, pc.sigma_floor), cfg_.dt,
                                pc.process_accel_std);

    const auto veh_noise = RetinalNoiseParams::vehicle(params_.nu_veh);
    const double sv = observation_sigma(state_, cfg_.geom, AgentKind::Vehicle, 0.0, veh_noise, pc);
    const double zv = other_longitudinal_position(state_, AgentKind::Vehicle) + normal(rng, 0.0, sv);
    veh_belief_ = kalman_update(*veh_belief_, zv, std::max(sv, pc.sigma_floor), cfg_.dt,
                                pc.process_accel_std);
  }

  EnvConfig cfg_;
  ObservationLayout ped_layout_;
  ObservationLayout veh_layout_;
  WorldState state_{};
  std::int64_t step_index_ = 0;
  PopulationSpec population_{};
  NonPolicyParams params_{};
  RewardFlags flags_{};
  ArrivalLog arrivals_{};
  std::optional<EpisodeOutcome> outcome_;
  bool done_ = false;
  StepState step_{};
  double target_accel_ = 0.0;
  bool veh_in_yield_zone_ = false;
  std::optional<KalmanBelief> ped_belief_;
  std::optional<KalmanBelief> veh_belief_;
};

struct Trajectory {
  double dt = 0.1;
  NonPolicyParams params{};
  std::vector<WorldState> states;  // initial state followed by one state per step
  std::vector<StepRecord> steps;
  std::optional<EpisodeOutcome> outcome;
  double ped_return = 0.0;
  double veh_return = 0.0;
};

struct RolloutOptions {
  double horizon = 2.0;       // s; the episode may end earlier
  bool deterministic = false; // squash the policy mean instead of sampling
};

/// Runs one closed-loop episode with fixed agent parameters.
inline Trajectory run_episode(CrossingEnv& env, const Policy& ped, const Policy& veh,
                              const WorldState& init, const PopulationSpec& population,
                              const NonPolicyParams& params, const RolloutOptions& opt, Rng& rng) {
  if (ped.layout().size() != env.ped_obs_layout().size() ||
      veh.layout().size() != env.veh_obs_layout().size())
    throw ContractError("policy layouts do not match the environment variant");
  env.reset(init, population, params, rng);
  Trajectory tr;
  tr.dt = env.config().dt;
  tr.params = params;
  tr.states.push_back(env.state());
  const auto max_steps = static_cast<std::int64_t>(std::llround(opt.horizon / tr.dt));
  for (std::int64_t k = 0; k < max_steps && !env.done(); ++k) {
    const auto op = env.ped_observation();
    const auto ov = env.veh_observation();
    const auto ap = ped.act(op, opt.deterministic, rng);
    const auto av = veh.act(ov, opt.deterministic, rng);
    auto res = env.step(ap, av, rng);
    tr.ped_return += res.reward.ped.total();
    tr.veh_return += res.reward.veh.total();
    tr.states.push_back(env.state());
    tr.steps.push_back(std::move(res.record));
    if (res.outcome) tr.outcome = res.outcome;
  }
  return tr;
}

/// `reps` episodes from the same initial state; agent parameters are drawn
/// from `population` per rep unless `fixed_params` supplies one per rep.
inline std::vector<Trajectory> rollout(const EnvConfig& cfg, const Policy& ped, const Policy& veh,
                                       const WorldState& init, const PopulationSpec& population,
                                       int reps, const RolloutOptions& opt, Rng& rng,
                                       std::span<const NonPolicyParams> fixed_params = {}) {
  if (!fixed_params.empty() && fixed_params.size() != static_cast<std::size_t>(reps))
    throw ContractError("fixed_params must supply one parameter set per rep");
  CrossingEnv env(cfg);
  std::vector<Trajectory> out;
  out.reserve(static_cast<std::size_t>(std::max(reps, 0)));
  for (int r = 0; r < reps; ++r) {
    const NonPolicyParams p =
        fixed_params.empty() ? sample_agent_params(population, rng) : fixed_params[static_cast<std::size_t>(r)];
    out.push_back(run_episode(env, ped, veh, init, population, p, opt, rng));
  }
  return out;
}

}  // namespace crossim
