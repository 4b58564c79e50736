// crossim command-line driver.
//
//   crossim synth-data --out DIR [--n N] [--mix a,b,c] [--seed S]
//   crossim extract    --in tracks.csv --out DIR
//   crossim train      --out DIR [--config F] [--variant V] [--seed S] [--pairs pairs.jsonl] [--method sac|bc]
//   crossim fit        --out DIR --policies DIR --segments segments.jsonl [--config F] [--quadratic-stub]
//   crossim eval       --out DIR --policies DIR --segments segments.jsonl [--config F] [--phi report.json]
//   crossim rollout    --out DIR --policies DIR --segments segments.jsonl --pair-id ID [--reps N]
//   crossim plot-data  --out DIR --policies DIR --segments segments.jsonl [--config F] [--phi report.json]
//
// Failures print one JSON error record on stderr and exit nonzero.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "crossim/crossim.hpp"

namespace fs = std::filesystem;
using namespace crossim;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string variant;
  std::string out;
};

RunConfig load_config(const Common& c) {
  RunConfig rc = c.config.empty() ? RunConfig{} : parse_run_config(read_json_file(c.config));
  if (c.seed) {
    rc.seed = *c.seed;
    rc.fit.seed = *c.seed;
  }
  if (!c.variant.empty()) rc.variant = parse_variant(c.variant);
  rc.env.variant = rc.variant;
  rc.validate();
  return rc;
}

void ensure_out(const std::string& out) {
  if (out.empty()) throw ValidationError("--out is required");
  fs::create_directories(out);
}

std::string path_in(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

struct PolicyPair {
  std::unique_ptr<Policy> ped, veh;
};

PolicyPair load_policies(const std::string& dir, Variant v) {
  PolicyPair p{policy_from_json(read_json_file(path_in(dir, "ped_policy.json"))),
               policy_from_json(read_json_file(path_in(dir, "veh_policy.json")))};
  if (p.ped->layout().variant != v && p.ped->layout().variant != Variant::NC)
    throw ValidationError("policy checkpoints were trained for variant " +
                          std::string(to_string(p.ped->layout().variant)));
  return p;
}

EnvConfig env_for(const RunConfig& rc, const PolicyPair& p) {
  EnvConfig e = rc.env;
  e.variant = p.ped->layout().variant;
  return e;
}

std::vector<TrajectorySegment> load_segments(const std::string& path) {
  auto segs = read_jsonl(path, segment_from_json);
  if (segs.empty()) throw ValidationError("no segments in '" + path + "'");
  return segs;
}

PhiVector phi_for(const RunConfig& rc, const std::string& phi_report) {
  if (phi_report.empty()) return rc.eval.phi;
  return phi_from_json(read_json_file(phi_report).at("phi_best"));
}

int cmd_synth(const Common& c, int n, const std::string& mix) {
  RunConfig rc = load_config(c);
  if (n >= 0) rc.data.n_pairs = n;
  if (!mix.empty()) {
    std::vector<double> v;
    std::stringstream ss(mix);
    std::string tok;
    while (std::getline(ss, tok, ',')) v.push_back(std::stod(tok));
    if (v.size() != 3) throw ValidationError("--mix needs three comma-separated proportions");
    rc.data.mix = {v[0], v[1], v[2]};
  }
  rc.validate();
  ensure_out(c.out);
  Rng rng(mix_seed(rc.seed, 1));
  const auto corpus = generate_synthetic_corpus(rc.data.n_pairs, rc.data.mix, rng, rc.env.geom);
  std::ofstream tracks(path_in(c.out, "tracks.csv"));
  write_tracks_csv(tracks, corpus.tracks);
  std::ofstream labels(path_in(c.out, "labels.csv"));
  labels << "ped_track_id,scenario\n";
  for (const auto& [id, sc] : corpus.labels) labels << id << ',' << to_string(sc) << '\n';
  std::cout << Json{{"tracks", corpus.tracks.size()}, {"pairs", corpus.labels.size()}}.dump() << '\n';
  return 0;
}

int cmd_extract(const Common& c, const std::string& in) {
  const RunConfig rc = load_config(c);
  if (in.empty()) throw ValidationError("--in is required");
  const auto tracks = read_tracks_csv(in);
  const auto pairs = extract_pairs(tracks, rc.env.geom, {rc.env.dt, 6.0, 2.0});
  const auto segs = segment_pairs(pairs, {rc.env.dt, 6.0, 2.0});
  ensure_out(c.out);
  write_jsonl(path_in(c.out, "pairs.jsonl"), pairs, pair_to_json);
  write_jsonl(path_in(c.out, "segments.jsonl"), segs, segment_to_json);
  std::cout << Json{{"pairs", pairs.size()}, {"segments", segs.size()}}.dump() << '\n';
  return 0;
}

int cmd_train(const Common& c, const std::string& pairs_path, const std::string& method) {
  RunConfig rc = load_config(c);
  if (method != "sac" && method != "bc") throw ValidationError("--method must be sac or bc");
  std::vector<InteractionPair> pairs;
  if (!pairs_path.empty()) pairs = read_jsonl(pairs_path, pair_from_json);
  if (method == "bc" && pairs.empty()) throw ValidationError("bc training needs --pairs");
  Rng rng(mix_seed(rc.seed, 2));
  if (method == "bc") {
    const auto [dp, dv] = bc_demonstrations(pairs, rc.env.obs_bounds);
    auto r = bc_train(dp, dv, rc.bc, rng, rc.env.obs_bounds);
    ensure_out(c.out);
    write_json_file(path_in(c.out, "ped_policy.json"), policy_to_json(r.ped));
    write_json_file(path_in(c.out, "veh_policy.json"), policy_to_json(r.veh));
    std::ofstream csv(path_in(c.out, "bc_loss.csv"));
    csv << "epoch,agent,mse\n";
    for (std::size_t i = 0; i < r.ped_loss.size(); ++i) csv << i + 1 << ",pedestrian," << r.ped_loss[i] << '\n';
    for (std::size_t i = 0; i < r.veh_loss.size(); ++i) csv << i + 1 << ",vehicle," << r.veh_loss[i] << '\n';
    return 0;
  }
  const EpisodeSampler sampler = pairs.size() >= 2
                                     ? kde_episode_sampler(fit_initial_kde(pairs), rc.env.geom)
                                     : default_episode_sampler(rc.env.geom);
  const auto r = sac_train(rc.env, sampler, rc.sac, rng);
  ensure_out(c.out);
  write_json_file(path_in(c.out, "ped_policy.json"), policy_to_json(r.ped));
  write_json_file(path_in(c.out, "veh_policy.json"), policy_to_json(r.veh));
  std::ofstream csv(path_in(c.out, "reward_curve.csv"));
  csv << "iteration,ped_mean_reward,veh_mean_reward,episodes\n";
  csv.precision(10);
  for (const auto& p : r.reward_curve)
    csv << p.iteration << ',' << p.ped_mean << ',' << p.veh_mean << ',' << p.episodes << '\n';
  return 0;
}

int cmd_fit(const Common& c, const std::string& policies, const std::string& segments, bool stub) {
  RunConfig rc = load_config(c);
  stub = stub || rc.quadratic_stub;
  Rng rng(mix_seed(rc.seed, 3));
  FitResult r;
  if (stub) {
    // Known bowl with its minimum at a fixed interior point of the unit box.
    const PhiVector target{0.3, 0.7, 0.5, 0.2, 0.8, 0.4, 0.6, 0.35};
    auto obj = [&](const PhiVector& phi, std::uint64_t) {
      const auto u = phi_to_unit(phi);
      double s = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) s += (u[i] - target[i]) * (u[i] - target[i]);
      return s;
    };
    ensure_out(c.out);
    r = fit_phi(obj, rc.fit, rng);
  } else {
    if (policies.empty() || segments.empty()) throw ValidationError("fit needs --policies and --segments");
    const auto pp = load_policies(policies, rc.variant);
    const auto segs = load_segments(segments);
    const auto env = env_for(rc, pp);
    const auto kdes = fit_real_kdes(real_segment_metrics(segs, env.geom, env.dt));
    ensure_out(c.out);
    r = fit_phi(make_nll_objective(env, *pp.ped, *pp.veh, segs, kdes, rc.fit.reps, rc.fit.horizon), rc.fit, rng);
  }
  write_json_file(path_in(c.out, "fit_report.json"), fit_report_to_json(r, rc.fit, rc.variant));
  std::cout << Json{{"best_objective", r.best_value}, {"phi_best", phi_to_json(r.phi_best)}}.dump() << '\n';
  return 0;
}

struct EvalOutputs {
  std::vector<SegmentRollouts> rolls;
  std::vector<MetricSamples> model, real;
};

EvalOutputs run_eval(const RunConfig& rc, const EnvConfig& env, const PolicyPair& pp,
                     const std::vector<TrajectorySegment>& segs, const PhiVector& phi) {
  EvalOutputs o;
  o.rolls = rollout_segments(env, *pp.ped, *pp.veh, segs, to_population_spec(phi), rc.eval.reps,
                             rc.eval.horizon, mix_seed(rc.seed, 4));
  o.model = pooled_model_metrics(o.rolls, env.geom, env.dt);
  o.real = real_segment_metrics(segs, env.geom, env.dt);
  return o;
}

void write_histograms(const std::string& path, const EvalOutputs& o) {
  std::ofstream csv(path);
  csv << "metric,source,bin_lo,bin_hi,count\n";
  for (std::size_t k = 0; k < kNumMetrics; ++k) {
    std::vector<double> m, r;
    for (const auto& s : o.model) m.insert(m.end(), s[k].begin(), s[k].end());
    for (const auto& s : o.real) r.insert(r.end(), s[k].begin(), s[k].end());
    if (m.empty() && r.empty()) continue;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double x : m) lo = std::min(lo, x), hi = std::max(hi, x);
    for (double x : r) lo = std::min(lo, x), hi = std::max(hi, x);
    if (hi <= lo) hi = lo + 1.0;
    const int bins = 30;
    for (const auto& [name, v] : {std::pair<const char*, const std::vector<double>*>{"model", &m}, {"real", &r}}) {
      std::vector<int> counts(bins, 0);
      for (double x : *v) ++counts[static_cast<std::size_t>(std::min(bins - 1, static_cast<int>((x - lo) / (hi - lo) * bins)))];
      for (int b = 0; b < bins; ++b)
        csv << kMetricNames[k] << ',' << name << ',' << lo + (hi - lo) * b / bins << ','
            << lo + (hi - lo) * (b + 1) / bins << ',' << counts[static_cast<std::size_t>(b)] << '\n';
    }
  }
}

void write_plot_data(const std::string& out, const EvalOutputs& o, const std::vector<TrajectorySegment>& segs) {
  write_histograms(path_in(out, "metric_histograms.csv"), o);
  std::ofstream prof(path_in(out, "speed_vs_distance.csv"));
  prof << "source,segment,rep,distance_to_crossing,ped_speed,veh_speed\n";
  for (std::size_t i = 0; i < segs.size(); ++i) {
    for (const auto& s : segment_states(segs[i]))
      prof << "real," << i << ",0," << -s.veh_x << ',' << s.ped_speed << ',' << s.veh_speed << '\n';
    for (std::size_t r = 0; r < o.rolls[i].trajectories.size(); ++r)
      for (const auto& s : o.rolls[i].trajectories[r].states)
        prof << "model," << i << ',' << r << ',' << -s.veh_x << ',' << s.ped_speed << ',' << s.veh_speed << '\n';
  }
  std::ofstream gaze(path_in(out, "gaze_histogram.csv"));
  gaze << "bin_lo_deg,bin_hi_deg,count\n";
  std::vector<int> counts(36, 0);
  for (const auto& sr : o.rolls)
    for (const auto& tr : sr.trajectories)
      for (const auto& st : tr.steps)
        ++counts[static_cast<std::size_t>(std::clamp(static_cast<int>((st.gaze_eccentricity_deg + 180.0) / 10.0), 0, 35))];
  for (int b = 0; b < 36; ++b) gaze << -180 + 10 * b << ',' << -170 + 10 * b << ',' << counts[static_cast<std::size_t>(b)] << '\n';
}

int cmd_eval(const Common& c, const std::string& policies, const std::string& segments,
             const std::string& phi_report, bool plots_only) {
  const RunConfig rc = load_config(c);
  if (policies.empty() || segments.empty()) throw ValidationError("needs --policies and --segments");
  const auto pp = load_policies(policies, rc.variant);
  const auto segs = load_segments(segments);
  const auto env = env_for(rc, pp);
  const PhiVector phi = clamp_phi(phi_for(rc, phi_report));
  const auto o = run_eval(rc, env, pp, segs, phi);
  ensure_out(c.out);
  write_plot_data(c.out, o, segs);
  if (plots_only) return 0;

  const auto kdes = fit_real_kdes(o.real);
  const auto nll = composite_nll(o.model, kdes);
  std::ofstream rep(path_in(c.out, "eval_report.jsonl"));
  Json metrics = Json::array();
  for (std::size_t k = 0; k < kNumMetrics; ++k) {
    std::vector<double> m, r;
    for (const auto& s : o.model) m.insert(m.end(), s[k].begin(), s[k].end());
    for (const auto& s : o.real) r.insert(r.end(), s[k].begin(), s[k].end());
    Json e = {{"metric", kMetricNames[k]}};
    e["nll"] = nll.per_metric[k] ? Json(*nll.per_metric[k]) : Json(nullptr);
    e["ks"] = (!m.empty() && !r.empty()) ? Json(ks_statistic(m, r)) : Json(nullptr);
    metrics.push_back(e);
  }
  rep << Json{{"record", "summary"}, {"variant", to_string(env.variant)}, {"phi", phi_to_json(phi)},
              {"composite_nll", nll.composite}, {"metrics", metrics}, {"warnings", nll.warnings}}
             .dump()
      << '\n';
  std::map<std::string, std::pair<double, double>> per_pair;
  std::map<std::string, int> per_pair_n;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const auto real = segment_states(segs[i]);
    for (const auto& tr : o.rolls[i].trajectories) {
      const std::size_t n = std::min(tr.states.size(), real.size());
      const auto e = ade_fde(std::span<const WorldState>(tr.states.data(), n),
                             std::span<const WorldState>(real.data(), n));
      per_pair[segs[i].pair_id].first += e.ade;
      per_pair[segs[i].pair_id].second += e.fde;
      ++per_pair_n[segs[i].pair_id];
    }
  }
  for (const auto& [id, v] : per_pair) {
    const double n = per_pair_n[id];
    rep << Json{{"record", "interaction"}, {"pair_id", id}, {"ade", v.first / n}, {"fde", v.second / n}}.dump() << '\n';
  }
  std::cout << Json{{"composite_nll", nll.composite}}.dump() << '\n';
  return 0;
}

int cmd_rollout(const Common& c, const std::string& policies, const std::string& segments,
                const std::string& pair_id, int reps, const std::string& phi_report) {
  RunConfig rc = load_config(c);
  if (policies.empty() || segments.empty() || pair_id.empty())
    throw ValidationError("rollout needs --policies, --segments and --pair-id");
  if (reps < 1) throw ValidationError("--reps must be >= 1");
  const auto pp = load_policies(policies, rc.variant);
  const auto segs = load_segments(segments);
  const auto it = std::find_if(segs.begin(), segs.end(),
                               [&](const TrajectorySegment& s) { return s.pair_id == pair_id && s.index == 0; });
  if (it == segs.end()) throw ValidationError("no pair '" + pair_id + "' in the segment file");
  const auto env = env_for(rc, pp);
  Rng rng(mix_seed(rc.seed, 5));
  RolloutOptions opt{rc.eval.horizon, false};
  const auto trs = rollout(env, *pp.ped, *pp.veh, it->initial, to_population_spec(clamp_phi(phi_for(rc, phi_report))),
                           reps, opt, rng);
  ensure_out(c.out);
  Json arr = Json::array();
  for (const auto& t : trs) arr.push_back(trajectory_to_json(t));
  write_json_file(path_in(c.out, "rollouts.json"), {{"pair_id", pair_id}, {"reps", reps}, {"trajectories", arr}});
  return 0;
}

int report_error(const char* kind, const std::exception& e, int code) {
  std::cerr << Json{{"error", kind}, {"message", e.what()}}.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pedestrian-vehicle crossing simulator"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* s) {
    s->add_option("--config", common.config, "JSON run configuration");
    s->add_option("--seed", common.seed, "seed for every stochastic stage");
    s->add_option("--variant", common.variant, "NC | MC | VC | VMC");
    s->add_option("--out", common.out, "output directory")->required();
  };
  int n = -1, reps = 5;
  std::string mix, in, pairs, method = "sac", policies, segments, phi_report, pair_id;
  bool stub = false;

  auto* synth = app.add_subcommand("synth-data", "generate a synthetic track corpus");
  add_common(synth);
  synth->add_option("--n", n, "number of pairs");
  synth->add_option("--mix", mix, "proportions vehicle_first,ped_first_yield,ped_first_no_yield");

  auto* extract = app.add_subcommand("extract", "extract interaction pairs and segments");
  add_common(extract);
  extract->add_option("--in", in, "track CSV")->required();

  auto* train = app.add_subcommand("train", "train policies (SAC or behavioural cloning)");
  add_common(train);
  train->add_option("--pairs", pairs, "pairs.jsonl (initial-state KDE / demonstrations)");
  train->add_option("--method", method, "sac | bc");

  auto* fit = app.add_subcommand("fit", "fit the population parameters");
  add_common(fit);
  fit->add_option("--policies", policies, "directory with ped_policy.json and veh_policy.json");
  fit->add_option("--segments", segments, "segments.jsonl");
  fit->add_flag("--quadratic-stub", stub, "optimize a known quadratic instead of rollouts");

  auto* eval = app.add_subcommand("eval", "evaluate policies against real segments");
  add_common(eval);
  eval->add_option("--policies", policies, "directory with ped_policy.json and veh_policy.json")->required();
  eval->add_option("--segments", segments, "segments.jsonl")->required();
  eval->add_option("--phi", phi_report, "fit_report.json supplying phi");

  auto* roll = app.add_subcommand("rollout", "roll out from a recorded pair start");
  add_common(roll);
  roll->add_option("--policies", policies, "directory with ped_policy.json and veh_policy.json")->required();
  roll->add_option("--segments", segments, "segments.jsonl")->required();
  roll->add_option("--pair-id", pair_id, "pair whose first segment start seeds the rollouts")->required();
  roll->add_option("--reps", reps, "rollouts per start state");
  roll->add_option("--phi", phi_report, "fit_report.json supplying phi");

  auto* plot = app.add_subcommand("plot-data", "write plot CSVs only");
  add_common(plot);
  plot->add_option("--policies", policies, "directory with ped_policy.json and veh_policy.json")->required();
  plot->add_option("--segments", segments, "segments.jsonl")->required();
  plot->add_option("--phi", phi_report, "fit_report.json supplying phi");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << Json{{"error", "usage"}, {"message", e.what()}}.dump() << '\n';
    return 2;
  }
  try {
    if (*synth) return cmd_synth(common, n, mix);
    if (*extract) return cmd_extract(common, in);
    if (*train) return cmd_train(common, pairs, method);
    if (*fit) return cmd_fit(common, policies, segments, stub);
    if (*eval) return cmd_eval(common, policies, segments, phi_report, false);
    if (*roll) return cmd_rollout(common, policies, segments, pair_id, reps, phi_report);
    if (*plot) return cmd_eval(common, policies, segments, phi_report, true);
  } catch (const ValidationError& e) {
    return report_error("validation", e, 3);
  } catch (const DomainError& e) {
    return report_error("domain", e, 4);
  } catch (const ContractError& e) {
    return report_error("contract", e, 5);
  } catch (const std::exception& e) {
    return report_error("internal", e, 1);
  }
  return 0;
}
