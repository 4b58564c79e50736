#pragma once

// JSON serialization: run configuration, policy checkpoints, pair/segment
// JSON-lines files, and fit reports.

#include <nlohmann/json.hpp>

#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "crossim/bc.hpp"
#include "crossim/data.hpp"
#include "crossim/env.hpp"
#include "crossim/fit.hpp"
#include "crossim/policy.hpp"
#include "crossim/sac.hpp"

namespace crossim {

using Json = nlohmann::json;

inline constexpr int kCheckpointVersion = 1;

namespace detail {

template <class T>
void read_opt(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("config field '") + key + "': " + e.what());
  }
}

inline void reject_unknown(const Json& j, std::initializer_list<const char*> known, const char* section) {
  if (!j.is_object()) throw ValidationError(std::string("config section '") + section + "' must be an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* n : known) ok = ok || k == n;
    if (!ok) throw ValidationError(std::string("unknown field '") + k + "' in config section '" + section + "'");
  }
}

}  // namespace detail

// ---------------------------------------------------------------- run config

struct EvalConfig {
  int reps = 5;
  double horizon = 2.0;
  double eps_v = 0.1;
  PhiVector phi = phi_midpoint();
};

struct DataConfig {
  int n_pairs = 30;
  ScenarioMix mix{};
};

struct RunConfig {
  Variant variant = Variant::VMC;
  std::uint64_t seed = 0;
  EnvConfig env{};
  SACConfig sac{};
  BCConfig bc{};
  FitConfig fit{};
  EvalConfig eval{};
  DataConfig data{};
  bool quadratic_stub = false;  // fit a known bowl instead of rollouts

  void validate() const {
    env.validate();
    sac.validate();
    bc.validate();
    fit.validate();
    if (eval.reps < 1) throw ValidationError("eval.reps must be >= 1");
    if (!(eval.horizon > 0.0)) throw ValidationError("eval.horizon must be positive");
    data.mix.validate();
    if (data.n_pairs < 0) throw ValidationError("data.n_pairs must be >= 0");
  }
};

inline void from_json_scene(const Json& j, SceneGeometry& g) {
  detail::reject_unknown(j, {"crossing_x", "crossing_y", "lane_half_width", "crossing_half_width_x",
                             "kerb_y", "ped_goal_y", "veh_goal_x", "veh_lane_y", "yield_zone_x_extent",
                             "yield_ped_x_tol", "yield_ped_y_tol", "ped_radius", "veh_length",
                             "veh_width", "max_episode_time", "ped_zone_half_x",
                             "ped_zone_kerb_depth", "ped_truncate_half_x", "veh_zone_upstream",
                             "veh_zone_downstream", "refuge_depth"},
                         "scene");
  using detail::read_opt;
  read_opt(j, "crossing_x", g.crossing_x);
  read_opt(j, "crossing_y", g.crossing_y);
  read_opt(j, "lane_half_width", g.lane_half_width);
  read_opt(j, "crossing_half_width_x", g.crossing_half_width_x);
  read_opt(j, "kerb_y", g.kerb_y);
  read_opt(j, "ped_goal_y", g.ped_goal_y);
  read_opt(j, "veh_goal_x", g.veh_goal_x);
  read_opt(j, "veh_lane_y", g.veh_lane_y);
  read_opt(j, "yield_zone_x_extent", g.yield_zone_x_extent);
  read_opt(j, "yield_ped_x_tol", g.yield_ped_x_tol);
  read_opt(j, "yield_ped_y_tol", g.yield_ped_y_tol);
  read_opt(j, "ped_radius", g.ped_radius);
  read_opt(j, "veh_length", g.veh_length);
  read_opt(j, "veh_width", g.veh_width);
  read_opt(j, "max_episode_time", g.max_episode_time);
  read_opt(j, "ped_zone_half_x", g.ped_zone_half_x);
  read_opt(j, "ped_zone_kerb_depth", g.ped_zone_kerb_depth);
  read_opt(j, "ped_truncate_half_x", g.ped_truncate_half_x);
  read_opt(j, "veh_zone_upstream", g.veh_zone_upstream);
  read_opt(j, "veh_zone_downstream", g.veh_zone_downstream);
  read_opt(j, "refuge_depth", g.refuge_depth);
}

inline RunConfig parse_run_config(const Json& j) {
  using detail::read_opt;
  detail::reject_unknown(j, {"variant", "seed", "dt", "scene", "sac", "bc", "fit", "eval", "data", "quadratic_stub"},
                         "root");
  RunConfig c;
  if (j.contains("variant")) c.variant = parse_variant(j.at("variant").get<std::string>());
  read_opt(j, "seed", c.seed);
  read_opt(j, "dt", c.env.dt);
  read_opt(j, "quadratic_stub", c.quadratic_stub);
  if (j.contains("scene")) from_json_scene(j.at("scene"), c.env.geom);
  if (j.contains("sac")) {
    const auto& s = j.at("sac");
    detail::reject_unknown(s, {"iterations", "lr", "gamma", "batch", "replay_capacity", "tau",
                               "target_entropy", "init_alpha", "hidden", "env_steps_per_iter",
                               "warmup_steps", "reward_window"},
                           "sac");
    read_opt(s, "iterations", c.sac.iterations);
    read_opt(s, "lr", c.sac.lr);
    read_opt(s, "gamma", c.sac.gamma);
    read_opt(s, "batch", c.sac.batch);
    read_opt(s, "replay_capacity", c.sac.replay_capacity);
    read_opt(s, "tau", c.sac.tau);
    if (s.contains("target_entropy")) c.sac.target_entropy = s.at("target_entropy").get<double>();
    read_opt(s, "init_alpha", c.sac.init_alpha);
    read_opt(s, "hidden", c.sac.hidden);
    read_opt(s, "env_steps_per_iter", c.sac.env_steps_per_iter);
    read_opt(s, "warmup_steps", c.sac.warmup_steps);
    read_opt(s, "reward_window", c.sac.reward_window);
  }
  if (j.contains("bc")) {
    const auto& s = j.at("bc");
    detail::reject_unknown(s, {"hidden", "lr", "ped_epochs", "veh_epochs", "batch"}, "bc");
    read_opt(s, "hidden", c.bc.hidden);
    read_opt(s, "lr", c.bc.lr);
    read_opt(s, "ped_epochs", c.bc.ped_epochs);
    read_opt(s, "veh_epochs", c.bc.veh_epochs);
    read_opt(s, "batch", c.bc.batch);
  }
  if (j.contains("fit")) {
    const auto& s = j.at("fit");
    detail::reject_unknown(s, {"iterations", "initial", "reps", "horizon", "common_random_numbers",
                               "candidates", "refine_top", "refit_every"},
                           "fit");
    read_opt(s, "iterations", c.fit.iterations);
    read_opt(s, "initial", c.fit.initial);
    read_opt(s, "reps", c.fit.reps);
    read_opt(s, "horizon", c.fit.horizon);
    read_opt(s, "common_random_numbers", c.fit.common_random_numbers);
    read_opt(s, "candidates", c.fit.candidates);
    read_opt(s, "refine_top", c.fit.refine_top);
    read_opt(s, "refit_every", c.fit.refit_every);
  }
  if (j.contains("eval")) {
    const auto& s = j.at("eval");
    detail::reject_unknown(s, {"reps", "horizon", "eps_v", "phi"}, "eval");
    read_opt(s, "reps", c.eval.reps);
    read_opt(s, "horizon", c.eval.horizon);
    read_opt(s, "eps_v", c.eval.eps_v);
    if (s.contains("phi")) {
      const auto v = s.at("phi").get<std::vector<double>>();
      if (v.size() != 8) throw ValidationError("eval.phi must have 8 entries");
      std::copy(v.begin(), v.end(), c.eval.phi.begin());
    }
  }
  if (j.contains("data")) {
    const auto& s = j.at("data");
    detail::reject_unknown(s, {"n_pairs", "mix"}, "data");
    read_opt(s, "n_pairs", c.data.n_pairs);
    if (s.contains("mix")) {
      const auto v = s.at("mix").get<std::vector<double>>();
      if (v.size() != 3) throw ValidationError("data.mix must have 3 proportions");
      c.data.mix = {v[0], v[1], v[2]};
    }
  }
  c.fit.seed = c.seed;
  c.validate();
  return c;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ValidationError("malformed JSON in '" + path + "': " + e.what());
  }
}

// ---------------------------------------------------------------- checkpoints

inline Json layout_to_json(const ObservationLayout& l) {
  Json f = Json::array();
  for (const auto& x : l.features) f.push_back({{"name", x.name}, {"min", x.min}, {"max", x.max}, {"log1p", x.log1p}});
  return {{"agent", std::string(to_string(l.agent))}, {"variant", std::string(to_string(l.variant))}, {"features", f}};
}

inline ObservationLayout layout_from_json(const Json& j) {
  ObservationLayout l;
  l.agent = j.at("agent").get<std::string>() == "pedestrian" ? AgentKind::Pedestrian : AgentKind::Vehicle;
  l.variant = parse_variant(j.at("variant").get<std::string>());
  for (const auto& f : j.at("features"))
    l.features.push_back({f.at("name").get<std::string>(), f.at("min").get<double>(),
                          f.at("max").get<double>(), f.at("log1p").get<bool>()});
  return l;
}

inline Json action_spec_to_json(const ActionSpec& s) {
  Json a = Json::array();
  for (const auto& d : s.dims) a.push_back({{"name", d.name}, {"lo", d.range.lo}, {"hi", d.range.hi}});
  return a;
}

inline ActionSpec action_spec_from_json(const Json& j) {
  ActionSpec s;
  for (const auto& d : j) s.dims.push_back({d.at("name").get<std::string>(), {d.at("lo").get<double>(), d.at("hi").get<double>()}});
  return s;
}

inline Json net_to_json(const nn::Mlp<float>& net) {
  return {{"sizes", net.sizes()}, {"params", net.flatten()}};
}

inline nn::Mlp<float> net_from_json(const Json& j) {
  const auto sizes = j.at("sizes").get<std::vector<int>>();
  Rng dummy(0);
  nn::Mlp<float> net(sizes, dummy);
  net.unflatten(j.at("params").get<std::vector<float>>());
  return net;
}

inline Json policy_to_json(const GaussianPolicy& p) {
  return {{"format", "crossim-policy"}, {"version", kCheckpointVersion}, {"kind", "gaussian"},
          {"layout", layout_to_json(p.layout())}, {"actions", action_spec_to_json(p.action_spec())},
          {"net", net_to_json(p.net())}};
}

inline Json policy_to_json(const BcPolicy& p) {
  return {{"format", "crossim-policy"}, {"version", kCheckpointVersion}, {"kind", "bc"},
          {"layout", layout_to_json(p.layout())}, {"actions", action_spec_to_json(p.action_spec())},
          {"net", net_to_json(p.net())}};
}

inline std::unique_ptr<Policy> policy_from_json(const Json& j) {
  try {
    if (j.at("format") != "crossim-policy") throw ValidationError("not a policy checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion)
      throw ValidationError("unsupported checkpoint version");
    auto layout = layout_from_json(j.at("layout"));
    auto spec = action_spec_from_json(j.at("actions"));
    auto net = net_from_json(j.at("net"));
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "gaussian") return std::make_unique<GaussianPolicy>(std::move(layout), std::move(spec), std::move(net));
    if (kind == "bc") return std::make_unique<BcPolicy>(std::move(layout), std::move(spec), std::move(net));
    throw ValidationError("unknown policy kind '" + kind + "'");
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("malformed policy checkpoint: ") + e.what());
  }
}

inline void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << j.dump(1) << '\n';
}

// ---------------------------------------------------------------- pairs and segments

inline Json sample_to_json(const PairSample& s) {
  return {{"t", s.t}, {"ped_x", s.ped_x}, {"ped_y", s.ped_y}, {"ped_speed", s.ped_speed},
          {"ped_heading", s.ped_heading}, {"veh_x", s.veh_x}, {"veh_y", s.veh_y},
          {"veh_speed", s.veh_speed}, {"veh_accel", s.veh_accel}};
}

inline PairSample sample_from_json(const Json& j) {
  PairSample s;
  s.t = j.at("t").get<double>();
  s.ped_x = j.at("ped_x").get<double>();
  s.ped_y = j.at("ped_y").get<double>();
  s.ped_speed = j.at("ped_speed").get<double>();
  s.ped_heading = j.at("ped_heading").get<double>();
  s.veh_x = j.at("veh_x").get<double>();
  s.veh_y = j.at("veh_y").get<double>();
  s.veh_speed = j.at("veh_speed").get<double>();
  s.veh_accel = j.at("veh_accel").get<double>();
  return s;
}

inline Json pair_to_json(const InteractionPair& p) {
  Json s = Json::array();
  for (const auto& x : p.samples) s.push_back(sample_to_json(x));
  return {{"id", p.id}, {"ped_id", p.ped_id}, {"veh_id", p.veh_id}, {"t_start", p.t_start}, {"samples", s}};
}

inline InteractionPair pair_from_json(const Json& j) {
  InteractionPair p;
  p.id = j.at("id").get<std::string>();
  p.ped_id = j.at("ped_id").get<std::string>();
  p.veh_id = j.at("veh_id").get<std::string>();
  p.t_start = j.at("t_start").get<double>();
  for (const auto& s : j.at("samples")) p.samples.push_back(sample_from_json(s));
  return p;
}

inline Json state_to_json(const WorldState& s) {
  return {{"t", s.t}, {"ped_x", s.ped_x}, {"ped_y", s.ped_y}, {"ped_speed", s.ped_speed},
          {"ped_heading", s.ped_heading}, {"gaze_offset", s.gaze_offset}, {"veh_x", s.veh_x},
          {"veh_y", s.veh_y}, {"veh_speed", s.veh_speed}, {"veh_accel", s.veh_accel}};
}

inline WorldState state_from_json(const Json& j) {
  WorldState s;
  s.t = j.at("t").get<double>();
  s.ped_x = j.at("ped_x").get<double>();
  s.ped_y = j.at("ped_y").get<double>();
  s.ped_speed = j.at("ped_speed").get<double>();
  s.ped_heading = j.at("ped_heading").get<double>();
  s.gaze_offset = j.value("gaze_offset", 0.0);
  s.veh_x = j.at("veh_x").get<double>();
  s.veh_y = j.at("veh_y").get<double>();
  s.veh_speed = j.at("veh_speed").get<double>();
  s.veh_accel = j.at("veh_accel").get<double>();
  return s;
}

inline Json segment_to_json(const TrajectorySegment& s) {
  Json a = Json::array();
  for (const auto& x : s.samples) a.push_back(sample_to_json(x));
  return {{"pair_id", s.pair_id}, {"index", s.index}, {"initial", state_to_json(s.initial)}, {"samples", a}};
}

inline TrajectorySegment segment_from_json(const Json& j) {
  TrajectorySegment s;
  s.pair_id = j.at("pair_id").get<std::string>();
  s.index = j.at("index").get<int>();
  s.initial = state_from_json(j.at("initial"));
  for (const auto& x : j.at("samples")) s.samples.push_back(sample_from_json(x));
  return s;
}

template <class T, class F>
void write_jsonl(const std::string& path, const std::vector<T>& items, F to_json) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  for (const auto& x : items) out << to_json(x).dump() << '\n';
}

template <class F>
auto read_jsonl(const std::string& path, F from_json) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::vector<decltype(from_json(Json{}))> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(from_json(Json::parse(line)));
    } catch (const Json::exception& e) {
      throw ValidationError(path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------- trajectories and reports

inline Json trajectory_to_json(const Trajectory& tr) {
  Json states = Json::array(), steps = Json::array();
  for (const auto& s : tr.states) states.push_back(state_to_json(s));
  for (const auto& r : tr.steps) {
    Json j = {{"ped_action", r.ped_action}, {"veh_action", r.veh_action},
              {"veh_target_accel", r.veh_target_accel}, {"veh_applied_accel", r.veh_applied_accel},
              {"gaze_eccentricity_deg", r.gaze_eccentricity_deg}, {"gait_step_started", r.gait_step_started},
              {"ped_reward", r.reward.ped.total()}, {"veh_reward", r.reward.veh.total()}};
    if (r.ped_belief) j["ped_belief"] = {{"pos", r.ped_belief->pos()}, {"speed", r.ped_belief->speed()},
                                         {"pos_var", r.ped_belief->pos_var()}, {"speed_var", r.ped_belief->speed_var()}};
    if (r.veh_belief) j["veh_belief"] = {{"pos", r.veh_belief->pos()}, {"speed", r.veh_belief->speed()},
                                         {"pos_var", r.veh_belief->pos_var()}, {"speed_var", r.veh_belief->speed_var()}};
    steps.push_back(std::move(j));
  }
  Json out = {{"dt", tr.dt},
              {"params", {{"nu_ped", tr.params.nu_ped}, {"nu_veh", tr.params.nu_veh},
                          {"w_ped", tr.params.w_ped}, {"w_veh", tr.params.w_veh}}},
              {"ped_return", tr.ped_return}, {"veh_return", tr.veh_return},
              {"states", states}, {"steps", steps}};
  if (tr.outcome) out["outcome"] = std::string(to_string(tr.outcome->kind));
  return out;
}

inline Json phi_to_json(const PhiVector& phi) {
  Json j = Json::object();
  for (std::size_t i = 0; i < phi.size(); ++i) j[std::string(kPhiNames[i])] = phi[i];
  return j;
}

inline PhiVector phi_from_json(const Json& j) {
  PhiVector phi{};
  for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = j.at(std::string(kPhiNames[i])).get<double>();
  return phi;
}

inline Json fit_report_to_json(const FitResult& r, const FitConfig& cfg, Variant v) {
  Json hist = Json::array();
  for (std::size_t i = 0; i < r.history.size(); ++i) {
    const auto& e = r.history[i];
    hist.push_back({{"iteration", i}, {"phi", phi_to_json(e.phi)}, {"objective", e.value},
                    {"seed", e.seed}, {"cached", e.cached}});
  }
  return {{"variant", std::string(to_string(v))},
          {"phi_best", phi_to_json(r.phi_best)},
          {"best_objective", r.best_value},
          {"config", {{"iterations", cfg.iterations}, {"initial", cfg.initial}, {"reps", cfg.reps},
                      {"horizon", cfg.horizon}, {"seed", cfg.seed},
                      {"common_random_numbers", cfg.common_random_numbers},
                      {"candidates", cfg.candidates}, {"refine_top", cfg.refine_top},
                      {"refit_every", cfg.refit_every}}},
          {"history", hist}};
}

inline FitResult fit_report_from_json(const Json& j) {
  FitResult r;
  r.phi_best = phi_from_json(j.at("phi_best"));
  r.best_value = j.at("best_objective").get<double>();
  for (const auto& h : j.at("history"))
    r.history.push_back({phi_from_json(h.at("phi")), h.at("objective").get<double>(),
                         h.at("seed").get<std::uint64_t>(), h.at("cached").get<bool>()});
  return r;
}

}  // namespace crossim
