#pragma once

#include "crossim/world.hpp"

namespace crossim {

struct RewardConstants {
  double arrive_base = 40.0;
  double arrive_time_slope = 0.5;
  double collision = -40.0;
  double offroad = -0.2;
  double nonyield = -30.0;
};

struct PedReward {
  double arrive = 0.0;
  double move = 0.0;
  double walk = 0.0;
  double off = 0.0;
  double collision = 0.0;
  double total() const { return arrive + move + walk + off + collision; }
};

struct VehReward {
  double arrive = 0.0;
  double nonyield = 0.0;
  double collision = 0.0;
  double total() const { return arrive + nonyield + collision; }
};

struct RewardBreakdown {
  PedReward ped;
  VehReward veh;
};

/// One-shot bookkeeping. An agent that has arrived or collided is terminal
/// and receives nothing further.
struct RewardFlags {
  bool nonyield_fired = false;
  bool ped_arrived = false;
  bool veh_arrived = false;
  bool ped_collided = false;
  bool veh_collided = false;

  bool ped_done() const { return ped_arrived || ped_collided; }
  bool veh_done() const { return veh_arrived || veh_collided; }
};

/// `walk_penalty` is the step-onset effort penalty (zero off step onsets and
/// in variants without motor constraints). `state` is the post-step state.
inline PedReward ped_step_reward(const WorldState& state, double dy, double walk_penalty,
                                 bool offroad, bool collided, bool arrived, RewardFlags& flags,
                                 const RewardConstants& c = {}) {
  PedReward r;
  if (flags.ped_done()) return r;
  r.move = dy;
  r.walk = walk_penalty;
  if (offroad) r.off = c.offroad;
  if (collided) {
    r.collision = c.collision;
    flags.ped_collided = true;
    return r;
  }
  if (arrived) {
    r.arrive = c.arrive_base - c.arrive_time_slope * state.t;
    flags.ped_arrived = true;
  }
  return r;
}

/// `entered_yield_violation` is true on the step the vehicle first enters the
/// yield zone with the pedestrian in its tolerance box.
inline VehReward veh_step_reward(const WorldState& state, bool entered_yield_violation,
                                 bool collided, bool arrived, RewardFlags& flags,
                                 const RewardConstants& c = {}) {
  VehReward r;
  if (flags.veh_done()) return r;
  if (entered_yield_violation && !flags.nonyield_fired) {
    r.nonyield = c.nonyield;
    flags.nonyield_fired = true;
  }
  if (collided) {
    r.collision = c.collision;
    flags.veh_collided = true;
    return r;
  }
  if (arrived) {
    r.arrive = c.arrive_base - c.arrive_time_slope * state.t;
    flags.veh_arrived = true;
  }
  return r;
}

}  // namespace crossim
