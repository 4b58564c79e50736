// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Each criterion also has a wall-clock budget.

#include <Eigen/Dense>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "crossim/crossim.hpp"

using namespace crossim;

namespace {

struct Check {
  bool ok = true;
  std::ostringstream note;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      note << " [failed: " << what << "]";
    }
  }
  void near(double got, double want, double tol, const std::string& what) {
    const bool pass = std::isfinite(got) && std::abs(got - want) <= tol;
    if (!pass) {
      ok = false;
      note << " [failed: " << what << " got " << got << " want " << want << " tol " << tol << "]";
    }
  }
};

int run(int id, const char* name, double budget_s, const std::function<void(Check&)>& body) {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.ok = false;
    c.note << " [exception: " << e.what() << "]";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > budget_s) {
    c.ok = false;
    c.note << " [over time budget " << budget_s << " s]";
  }
  std::printf("%s  %2d  %-28s %.2fs %s\n", c.ok ? "PASS" : "FAIL", id, name, secs, c.note.str().c_str());
  std::fflush(stdout);
  return c.ok ? 0 : 1;
}

// ---------------------------------------------------------------- 1

void formulas(Check& c) {
  for (double d : {2.0, 20.0}) c.near(positional_noise_sigma(d, d, RetinalNoiseParams::pedestrian(0.0)), 0.0, 1e-12, "sigma at nu=0");
  c.near(positional_noise_sigma(20.0, 20.0, RetinalNoiseParams::pedestrian(0.05)), 7.74551118072137944, 1e-6, "sigma(h=1.6,d=20,dl=20,nu=0.05)");
  c.near(relative_acuity(0.0), 1.0, 0.0, "alpha(0)");
  for (double e : {2.0, 10.0, 40.0}) c.near(relative_acuity(-e), relative_acuity(e), 0.0, "alpha even");
  c.near(relative_acuity(10.0), 0.128906003763374711, 1e-6, "alpha(10 deg)");
  for (double tt : {0.5, 1.0}) c.near(walking_effort(1.3, 1.3 * std::cos(tt), tt), 0.0, 1e-15, "effort zero");
  for (double k : {0.5, 2.0, 4.0})
    c.near(walking_effort(k * 1.1, k * 1.4, 0.9), k * k * walking_effort(1.1, 1.4, 0.9), 1e-12, "effort homogeneity");
  c.near(step_duration(1.0), 1.0, 0.0, "T_step(1)");
  for (double w : {1.5, 4.0, 10.0}) {
    double a = 2.0;
    for (int n = 1; n <= 50; ++n) {
      a = smooth_accel(a, -3.0, w);
      c.near(a, -3.0 + 5.0 * std::pow(1.0 - 1.0 / w, n), 1e-9, "smoothing closed form");
    }
  }
  c.note << "sigma=" << positional_noise_sigma(20.0, 20.0, RetinalNoiseParams::pedestrian(0.05))
         << " alpha(10)=" << relative_acuity(10.0);
}

// ---------------------------------------------------------------- 2

void kalman(Check& c) {
  // Textbook predict/correct with P = (I - K H) P.
  KalmanBelief b;
  b.mean << -12.0, 6.5;
  b.covariance << 3.0, -0.4, -0.4, 1.2;
  const double z = -11.1, r = 0.8, dt = 0.1, qa = 0.5;
  Eigen::Matrix2d F;
  F << 1, dt, 0, 1;
  const Eigen::Vector2d G(0.5 * dt * dt, dt);
  const Eigen::Vector2d xp = F * b.mean;
  const Eigen::Matrix2d Pp = F * b.covariance * F.transpose() + qa * qa * G * G.transpose();
  const Eigen::Vector2d K = Pp.col(0) / (Pp(0, 0) + r * r);
  const Eigen::Vector2d x_ref = xp + K * (z - xp(0));
  Eigen::Matrix2d ikh = Eigen::Matrix2d::Identity();
  ikh.col(0) -= K;
  const Eigen::Matrix2d P_ref = ikh * Pp;
  const auto post = kalman_update(b, z, r, dt, qa);
  c.near((post.mean - x_ref).cwiseAbs().maxCoeff(), 0.0, 1e-10, "mean vs textbook");
  c.near((post.covariance - P_ref).cwiseAbs().maxCoeff(), 0.0, 1e-10, "covariance vs textbook");

  // Filter consistency: mean normalized estimation error squared over 1000
  // independent tracks of a white-acceleration target, expected 2.
  Rng rng(2718);
  double nees = 0.0;
  const int runs = 1000, steps = 50;
  for (int i = 0; i < runs; ++i) {
    double x = uniform(rng, -30.0, -10.0), v = uniform(rng, 3.0, 10.0);
    auto bel = kalman_init(x, v, 2.0, 1.0, rng);
    for (int k = 0; k < steps; ++k) {
      const double a = normal(rng, 0.0, qa);
      x += v * dt + 0.5 * a * dt * dt;
      v += a * dt;
      bel = kalman_update(bel, x + normal(rng, 0.0, r), r, dt, qa);
    }
    const Eigen::Vector2d e(x - bel.pos(), v - bel.speed());
    nees += e.dot(bel.covariance.ldlt().solve(e));
  }
  nees /= runs;
  c.require(nees >= 1.6 && nees <= 2.4, "chi-square statistic in [1.6, 2.4]");
  c.note << "nees=" << nees;
}

// ---------------------------------------------------------------- 3

struct ScriptTotals {
  double ped = 0.0, veh = 0.0;
  int ped_arrivals = 0, veh_arrivals = 0, nonyield = 0;
  OutcomeKind outcome = OutcomeKind::Timeout;
  double ped_arrival_reward = 0.0;
};

// dt = 1/8 keeps every position and reward exactly representable.
ScriptTotals script(WorldState init, double ped_speed, const std::function<double(const WorldState&)>& veh) {
  EnvConfig cfg;
  cfg.dt = 0.125;
  CrossingEnv env(cfg);
  Rng rng(0);
  env.reset(init, {}, {}, rng);
  ScriptTotals t;
  while (!env.done()) {
    const auto r = env.step(std::vector<double>{ped_speed, 0.0}, std::vector<double>{veh(env.state())}, rng);
    t.ped += r.reward.ped.total();
    t.veh += r.reward.veh.total();
    t.ped_arrivals += r.reward.ped.arrive != 0.0;
    t.veh_arrivals += r.reward.veh.arrive != 0.0;
    t.nonyield += r.reward.veh.nonyield != 0.0;
    if (r.reward.ped.arrive != 0.0) t.ped_arrival_reward = r.reward.ped.arrive;
  }
  t.outcome = env.outcome()->kind;
  return t;
}

void rewards(Check& c) {
  // Yielding vehicle: the pedestrian walks 5 m at 0.5 m/s and arrives at
  // t = 10; the vehicle then accelerates at 3 m/s^2 from x = -20 and needs
  // 31 steps (0.046875 k (k + 1) / 2 >= 23).
  WorldState a;
  a.ped_y = -3.25;
  a.veh_x = -20.0;
  const auto ta = script(a, 0.5, [](const WorldState& s) { return s.ped_y < 1.75 ? 0.0 : 3.0; });
  c.require(ta.outcome == OutcomeKind::BothArrived, "yield script ends with both arrived");
  c.require(ta.ped_arrival_reward == 35.0, "arrival at t=10 gives 35");
  c.require(ta.ped == 5.0 + 35.0, "yield script pedestrian total");
  c.require(ta.veh == 40.0 - 0.5 * 13.875, "yield script vehicle total");
  c.require(ta.ped_arrivals == 1 && ta.veh_arrivals == 1 && ta.nonyield == 0, "yield script one-shot counts");

  // Non-yield: the vehicle passes a pedestrian waiting at the kerb, arriving
  // after 9 steps; the pedestrian never moves and the episode times out.
  WorldState b;
  b.ped_y = -1.75;
  b.veh_x = -8.0;
  b.veh_speed = 10.0;
  const auto tb = script(b, 0.0, [](const WorldState&) { return 0.0; });
  c.require(tb.outcome == OutcomeKind::Timeout, "non-yield script times out");
  c.require(tb.veh == -30.0 + 40.0 - 0.5 * 1.125, "non-yield script vehicle total");
  c.require(tb.ped == 0.0, "non-yield script pedestrian total");
  c.require(tb.nonyield == 1 && tb.veh_arrivals == 1 && tb.ped_arrivals == 0, "non-yield fires exactly once");

  // Collision with a pedestrian standing in the lane.
  WorldState d;
  d.ped_y = 0.0;
  d.veh_x = -8.0;
  d.veh_speed = 10.0;
  const auto td = script(d, 0.0, [](const WorldState&) { return 0.0; });
  c.require(td.outcome == OutcomeKind::Collision, "collision script collides");
  c.require(td.ped == -40.0 && td.veh == -70.0, "collision script totals");
  c.note << "totals " << ta.ped << "/" << ta.veh << ", " << tb.ped << "/" << tb.veh << ", " << td.ped << "/" << td.veh;
}

// ---------------------------------------------------------------- 4

void eval_oracles(Check& c) {
  const std::vector<double> a{1, 2, 3}, b{2, 3, 4}, far{50, 60};
  c.near(ks_statistic(a, a), 0.0, 0.0, "KS identical");
  c.near(ks_statistic(a, far), 1.0, 0.0, "KS disjoint");
  c.near(ks_statistic(a, b), 1.0 / 3.0, 1e-15, "KS shifted");
  c.near(scott_bandwidth(2.0, 32), 1.0, 1e-15, "Scott bandwidth");

  std::vector<Point2> real, off, ramp;
  for (int i = 0; i < 8; ++i) {
    real.push_back({0.5 * i, -1.0});
    off.push_back({0.5 * i - 3.0, 3.0});
    ramp.push_back({0.5 * i, -1.0 + i});
  }
  const auto e1 = ade_fde(std::span<const Point2>(off), std::span<const Point2>(real));
  const auto e2 = ade_fde(std::span<const Point2>(ramp), std::span<const Point2>(real));
  c.near(e1.ade, 5.0, 1e-15, "ADE constant offset");
  c.near(e1.fde, 5.0, 1e-15, "FDE constant offset");
  c.near(e2.ade, 3.5, 1e-15, "ADE ramp");
  c.near(e2.fde, 7.0, 1e-15, "FDE ramp");

  // Two metrics; hand-averaged NLL from direct kernel sums.
  const std::vector<double> r0{0.0, 2.0}, r1{1.0, 1.5, 4.0};
  const std::vector<GaussianKde1D> kdes{GaussianKde1D::fit(r0), GaussianKde1D::fit(r1)};
  auto ref = [](const std::vector<double>& xs, double q) {
    const double n = static_cast<double>(xs.size());
    double mean = 0.0, ss = 0.0;
    for (double x : xs) mean += x / n;
    for (double x : xs) ss += (x - mean) * (x - mean);
    const double h = std::sqrt(ss / (n - 1.0)) * std::pow(n, -0.2);
    double s = 0.0;
    for (double x : xs) s += std::exp(-0.5 * (q - x) * (q - x) / (h * h)) / (h * std::sqrt(2.0 * std::numbers::pi));
    return -std::log(s / n);
  };
  const std::vector<std::vector<std::vector<double>>> model{{{1.0, 0.5}, {2.0}}, {{3.0}, {1.2, 0.0, 5.0}}};
  const double m0 = ((ref(r0, 1.0) + ref(r0, 0.5)) / 2.0 + ref(r0, 3.0)) / 2.0;
  const double m1 = (ref(r1, 2.0) + (ref(r1, 1.2) + ref(r1, 0.0) + ref(r1, 5.0)) / 3.0) / 2.0;
  const double got = composite_nll(model, kdes).composite;
  c.near(got, (m0 + m1) / 2.0, 1e-12, "composite NLL two-metric toy");
  c.note << "ks=" << ks_statistic(a, b) << " nll=" << got;
}

// ---------------------------------------------------------------- 5

void gp_ei(Check& c) {
  c.near(expected_improvement(2.0, 0.0, 2.0), 0.0, 0.0, "EI at std=0, mean=best");
  c.near(expected_improvement(2.0, 1.0, 2.0), 0.3989, 5e-5, "EI at z=0");

  const PhiVector target{0.3, 0.7, 0.5, 0.2, 0.8, 0.4, 0.6, 0.35};
  FitConfig cfg;
  cfg.iterations = 200;
  cfg.initial = 50;
  cfg.seed = 1;
  Rng rng(1);
  int evals = 0;
  auto obj = [&](const PhiVector& phi, std::uint64_t) {
    ++evals;
    const auto u = phi_to_unit(phi);
    double s = 0.0;
    for (std::size_t i = 0; i < 8; ++i) s += (u[i] - target[i]) * (u[i] - target[i]) * (1.0 + 0.5 * static_cast<double>(i));
    return s;
  };
  const auto r = fit_phi(obj, cfg, rng);
  const auto u = phi_to_unit(r.phi_best);
  double dist = 0.0;
  for (std::size_t i = 0; i < 8; ++i) dist += (u[i] - target[i]) * (u[i] - target[i]);
  dist = std::sqrt(dist);
  const double tol = 0.05 * std::sqrt(8.0);
  c.require(evals <= 500, "at most 500 evaluations");
  c.require(dist <= tol, "minimizer within 5% of the box diagonal");
  c.note << "evals=" << evals << " dist=" << dist << " tol=" << tol;
}

// ---------------------------------------------------------------- 6

std::vector<RawTrack> fixture(double veh_x0, bool second_vehicle) {
  auto line = [](std::string id, AgentKind k, std::string dir, double t1, double x0, double y0, double vx, double vy) {
    RawTrack tr{std::move(id), k, std::move(dir), {}};
    for (int i = 0; i * 0.05 <= t1 + 1e-9; ++i) {
      const double t = i * 0.05;
      tr.samples.push_back({t, x0 + vx * t, y0 + vy * t});
    }
    return tr;
  };
  std::vector<RawTrack> t{line("p", AgentKind::Pedestrian, "East", 10.0, 0.5, -6.0, 0.0, 0.8),
                          line("v", AgentKind::Vehicle, "North", 16.0, veh_x0, 0.0, 5.0, 0.0)};
  if (second_vehicle) t.push_back(line("v2", AgentKind::Vehicle, "North", 16.0, veh_x0 - 3.0, 0.0, 5.0, 0.0));
  return t;
}

void pipeline(Check& c) {
  Rng rng(6);
  const int n = 24;
  const auto corpus = generate_synthetic_corpus(n, {}, rng);
  const auto pairs = extract_pairs(corpus.tracks);
  std::set<std::string> want, got;
  for (const auto& [ped, sc] : corpus.labels) want.insert(ped + "|v" + ped.substr(1));
  for (const auto& p : pairs) got.insert(p.id);
  c.require(got == want, "extracted pairs equal the constructed pairs");
  const auto segs = segment_pairs(pairs);
  c.require(segs.size() == 3 * pairs.size(), "3 segments per pair");
  for (const auto& s : segs) c.require(s.samples.size() == 20, "segment length 2 s");

  c.require(extract_pairs(fixture(-40.0, false)).size() == 1, "7 s overlap fixture kept");
  c.require(extract_pairs(fixture(-47.5, false)).empty(), "5.5 s overlap fixture rejected");
  c.require(extract_pairs(fixture(-40.0, true)).empty(), "two-vehicle fixture rejected");
  c.note << "pairs=" << pairs.size() << "/" << n << " segments=" << segs.size();
}

// ---------------------------------------------------------------- 7

struct PolicyStats {
  double reward = 0.0;
  double collision_rate = 0.0;
};

PolicyStats evaluate_policies(const EnvConfig& env, const Policy& ped, const Policy& veh, bool deterministic,
                              int episodes) {
  const auto sampler = default_episode_sampler(env.geom);
  CrossingEnv e(env);
  PolicyStats s;
  int collisions = 0;
  for (int i = 0; i < episodes; ++i) {
    Rng rng(mix_seed(12345, static_cast<std::uint64_t>(i)));
    const auto spec = sampler(rng);
    const auto tr = run_episode(e, ped, veh, spec.init, spec.population, spec.params,
                                {env.geom.max_episode_time, deterministic}, rng);
    s.reward += tr.ped_return + tr.veh_return;
    collisions += tr.outcome && tr.outcome->kind == OutcomeKind::Collision;
  }
  s.reward /= episodes;
  s.collision_rate = static_cast<double>(collisions) / episodes;
  return s;
}

SACConfig desk_sac() {
  SACConfig cfg;
  cfg.iterations = 5000;
  cfg.batch = 256;
  cfg.hidden = {64, 64};
  cfg.env_steps_per_iter = 8;
  cfg.warmup_steps = 500;
  return cfg;
}

void sac_nc(Check& c) {
  EnvConfig env;
  env.variant = Variant::NC;
  const RandomPolicy rp(ped_layout(env.variant), ped_action_spec(env.variant));
  const RandomPolicy rv(veh_layout(env.variant), veh_action_spec(env.variant));
  const auto base = evaluate_policies(env, rp, rv, false, 500);
  Rng rng(1);
  const auto res = sac_train(env, default_episode_sampler(env.geom), desk_sac(), rng);
  const auto trained = evaluate_policies(env, res.ped, res.veh, true, 500);
  c.require(trained.reward > base.reward, "mean episode reward above random");
  c.require(trained.collision_rate <= 0.5 * base.collision_rate, "collision rate at most half of random");
  c.note << "random reward=" << base.reward << " coll=" << base.collision_rate << "; trained reward=" << trained.reward
         << " coll=" << trained.collision_rate;
}

// ---------------------------------------------------------------- 8

void variant_ordering(Check& c) {
  Rng drng(2024);
  const auto corpus = generate_synthetic_corpus(30, {}, drng);
  const auto pairs = extract_pairs(corpus.tracks);
  const auto segs = segment_pairs(pairs);
  const auto kde = fit_initial_kde(pairs);
  const SceneGeometry g;
  const auto kdes = fit_real_kdes(real_segment_metrics(segs, g, 0.1));
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    double nll[2];
    int k = 0;
    for (Variant v : {Variant::NC, Variant::VMC}) {
      EnvConfig env;
      env.variant = v;
      Rng rng(seed);
      const auto res = sac_train(env, kde_episode_sampler(kde, g), desk_sac(), rng);
      const auto rolls = rollout_segments(env, res.ped, res.veh, segs, to_population_spec(phi_midpoint()), 5, 2.0, 77);
      nll[k++] = composite_nll(pooled_model_metrics(rolls, g, env.dt), kdes).composite;
    }
    c.require(nll[1] <= nll[0], "VMC composite NLL <= NC for seed " + std::to_string(seed));
    c.note << "seed " << seed << ": NC=" << nll[0] << " VMC=" << nll[1] << "; ";
  }
}

// ---------------------------------------------------------------- 9

void motor_signatures(Check& c) {
  const WorldState init = [] {
    WorldState s;
    s.ped_y = -3.5;
    s.ped_speed = 0.8;
    s.veh_x = -22.0;
    s.veh_speed = 7.0;
    return s;
  }();
  const PopulationSpec pop = to_population_spec(phi_midpoint());
  int gait_steps = 0;
  for (Variant v : {Variant::MC, Variant::VMC}) {
    EnvConfig env;
    env.variant = v;
    const RandomPolicy ped(ped_layout(v), ped_action_spec(v));
    const RandomPolicy veh(veh_layout(v), veh_action_spec(v));
    Rng rng(v == Variant::MC ? 31 : 32);
    const auto trs = rollout(env, ped, veh, init, pop, 100, {6.0, false}, rng);
    const auto speed_range = ped_action_spec(v).dims[0].range;
    for (const auto& tr : trs) {
      // Only records while the pedestrian is still walking.
      std::size_t n = 0;
      while (n < tr.steps.size()) {
        const auto& next = tr.states[n + 1];
        ++n;
        if (ped_at_goal(next, env.geom) || check_collision(next, env.geom)) break;
      }
      // Gait steps are delimited by records that start a step.
      std::size_t k = 0;
      while (k < n) {
        c.require(tr.steps[k].gait_step_started, "gait step boundary");
        std::size_t e = k + 1;
        while (e < n && !tr.steps[e].gait_step_started) ++e;
        const double v0 = tr.states[k].ped_speed;
        const double v_cmd = speed_range.clamp(tr.steps[k].ped_action[0]);
        const double accel = (v_cmd - v0) / step_duration(v_cmd);
        for (std::size_t j = k; j + 1 < e; ++j) {
          const double a = (tr.states[j + 1].ped_speed - tr.states[j].ped_speed) / env.dt;
          c.near(a, accel, 1e-9, "constant acceleration within a gait step");
        }
        if (e < n) c.near(tr.states[e].ped_speed, v_cmd, 1e-12, "gait step lands on its commanded speed");
        ++gait_steps;
        k = e;
      }
      if (!c.ok) return;
    }
  }

  // Smoothed vehicle acceleration under w_veh > 1.
  EnvConfig env;
  env.variant = Variant::VMC;
  const RandomPolicy ped(ped_layout(env.variant), ped_action_spec(env.variant));
  const RandomPolicy veh(veh_layout(env.variant), veh_action_spec(env.variant));
  Rng rng(33);
  int checked = 0;
  for (int r = 0; r < 100; ++r) {
    NonPolicyParams p = sample_agent_params(pop, rng);
    c.require(p.w_veh > 1.0, "w_veh > 1");
    const std::vector<NonPolicyParams> fixed{p};
    const auto tr = rollout(env, ped, veh, init, pop, 1, {6.0, false}, rng, fixed).front();
    double max_applied = 0.0, max_target = 0.0, a = init.veh_accel;
    for (std::size_t j = 0; j < tr.steps.size() && !veh_at_goal(tr.states[j], env.geom); ++j) {
      const auto& st = tr.steps[j];
      a = a + (st.veh_target_accel - a) / p.w_veh;
      c.near(st.veh_applied_accel, a, 1e-12, "applied acceleration follows the smoothing recursion");
      max_applied = std::max(max_applied, std::abs(st.veh_applied_accel));
      max_target = std::max(max_target, std::abs(st.veh_target_accel));
    }
    c.require(max_applied < max_target, "max |smoothed| < max |target|");
    ++checked;
    if (!c.ok) return;
  }
  c.note << "gait steps checked=" << gait_steps << " smoothing rollouts=" << checked;
}

// ---------------------------------------------------------------- 10

/// Linear map from the NC observation to an in-range action.
class LinearExpert : public Policy {
 public:
  LinearExpert(AgentKind k) : layout_(layout_for(k, Variant::NC)), spec_(action_spec_for(k, Variant::NC)), kind_(k) {}

  std::vector<double> act(std::span<const double> o, bool, Rng&) const override {
    if (kind_ == AgentKind::Pedestrian) return {0.9 + 0.6 * o[2] - 0.2 * o[6], 0.1 * (0.5 - o[1])};
    return {1.5 - 3.0 * o[6] + 1.0 * o[2] - 0.5 * o[1]};
  }
  const ObservationLayout& layout() const override { return layout_; }
  const ActionSpec& action_spec() const override { return spec_; }

 private:
  ObservationLayout layout_;
  ActionSpec spec_;
  AgentKind kind_;
};

void behavioural_cloning(Check& c) {
  EnvConfig env;
  const LinearExpert ped(AgentKind::Pedestrian), veh(AgentKind::Vehicle);
  const auto sampler = default_episode_sampler(env.geom);
  CrossingEnv e(env);
  Demonstrations dp, dv;
  Rng rng(10);
  for (int ep = 0; ep < 40; ++ep) {
    const auto spec = sampler(rng);
    e.reset(spec.init, spec.population, spec.params, rng);
    for (int k = 0; k < 40 && !e.done(); ++k) {
      const auto op = e.ped_observation(), ov = e.veh_observation();
      const auto ap = ped.act(op, true, rng), av = veh.act(ov, true, rng);
      dp.obs.push_back(op);
      dp.actions.push_back(ap);
      dv.obs.push_back(ov);
      dv.actions.push_back(av);
      e.step(ap, av, rng);
    }
  }
  const auto r = bc_train(dp, dv, BCConfig{}, rng);
  const double mse_p = bc_mse(r.ped.net(), dp), mse_v = bc_mse(r.veh.net(), dv);
  c.require(mse_p < 1e-3, "pedestrian BC MSE < 1e-3");
  c.require(mse_v < 1e-3, "vehicle BC MSE < 1e-3");

  const PopulationSpec pop = to_population_spec(phi_midpoint());
  const std::vector<NonPolicyParams> fixed(5, {pop.nu_ped.mu, pop.nu_veh.mu, pop.w_ped.mu, pop.w_veh.mu});
  const auto trs = rollout(env, r.ped, r.veh, sampler(rng).init, pop, 5, {2.0, true}, rng, fixed);
  for (const auto& t : trs) c.require(t.states == trs[0].states, "closed-loop BC rollouts identical across reps");
  c.note << "samples=" << dp.size() << " mse ped=" << mse_p << " veh=" << mse_v;
}

}  // namespace

int main(int argc, char** argv) {
  // Optional criterion ids on the command line run a subset.
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  auto run = [&](int id, const char* name, double budget_s, const std::function<void(Check&)>& body) {
    return only.empty() || only.count(id) ? ::run(id, name, budget_s, body) : 0;
  };
  int failed = 0;
  failed += run(1, "formula golden suite", 1.0, formulas);
  failed += run(2, "kalman filter", 10.0, kalman);
  failed += run(3, "reward accounting", 1.0, rewards);
  failed += run(4, "evaluation oracles", 5.0, eval_oracles);
  failed += run(5, "gp surrogate and EI", 120.0, gp_ei);
  failed += run(6, "data pipeline", 10.0, pipeline);
  failed += run(7, "desk-scale SAC (NC)", 1800.0, sac_nc);
  failed += run(8, "variant ordering", 3600.0, variant_ordering);
  failed += run(9, "motor signatures", 300.0, motor_signatures);
  failed += run(10, "behavioural cloning", 600.0, behavioural_cloning);
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
