#pragma once

// Population-parameter fitting: Bayesian optimization of phi over a
// rollout-based composite NLL.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <vector>

#include "crossim/data.hpp"
#include "crossim/env.hpp"
#include "crossim/eval.hpp"
#include "crossim/gp.hpp"
#include "crossim/params.hpp"

namespace crossim {

struct FitConfig {
  int iterations = 500;
  int initial = 100;
  int reps = 5;
  double horizon = 2.0;
  std::uint64_t seed = 0;
  bool common_random_numbers = true;  // one rollout seed for every evaluation
  int candidates = 1024;
  int refine_top = 3;
  int refit_every = 10;  // hyperparameter re-optimization period
  GpFitOptions gp{};

  void validate() const {
    if (iterations <= 0) throw ValidationError("fit.iterations must be positive");
    if (initial < 2 || initial > iterations) throw ValidationError("fit.initial must lie in [2, iterations]");
    if (reps < 1) throw ValidationError("fit.reps must be >= 1");
    if (!(horizon > 0.0)) throw ValidationError("fit.horizon must be positive");
    if (candidates < 1) throw ValidationError("fit.candidates must be positive");
    if (refine_top < 0) throw ValidationError("fit.refine_top must be >= 0");
    if (refit_every < 1) throw ValidationError("fit.refit_every must be >= 1");
  }
};

using ObjectiveFn = std::function<double(const PhiVector&, std::uint64_t seed)>;

struct FitEvaluation {
  PhiVector phi{};
  double value = 0.0;
  std::uint64_t seed = 0;
  bool cached = false;
};

struct FitResult {
  PhiVector phi_best{};
  double best_value = 0.0;
  std::vector<FitEvaluation> history;
};

namespace detail {

inline Eigen::VectorXd to_eigen(const PhiVector& u) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(u.size()));
  for (std::size_t i = 0; i < u.size(); ++i) v(static_cast<Eigen::Index>(i)) = u[i];
  return v;
}

/// Maximizes EI: random candidates (mostly uniform, some near the incumbent),
/// then coordinate refinement of the best few.
inline PhiVector propose_ei(const GaussianProcess& gp, double best, const PhiVector& incumbent_unit,
                            const FitConfig& cfg, Rng& rng) {
  const int n = cfg.candidates;
  const int local = n / 4;
  Eigen::MatrixXd C(n, 8);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 8; ++j)
      C(i, j) = i < local ? std::clamp(incumbent_unit[static_cast<std::size_t>(j)] + normal(rng, 0.0, 0.05), 0.0, 1.0)
                          : uniform(rng, 0.0, 1.0);
  const auto preds = gp.predict_batch(C);
  std::vector<double> ei(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    ei[static_cast<std::size_t>(i)] = expected_improvement(preds[static_cast<std::size_t>(i)].mean,
                                                           preds[static_cast<std::size_t>(i)].std, best);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  const int top = std::min(std::max(cfg.refine_top, 1), n);
  std::partial_sort(order.begin(), order.begin() + top, order.end(),
                    [&](int a, int b) { return ei[static_cast<std::size_t>(a)] > ei[static_cast<std::size_t>(b)]; });

  auto ei_at = [&](const Eigen::VectorXd& x) {
    const auto p = gp.predict(x);
    return expected_improvement(p.mean, p.std, best);
  };
  Eigen::VectorXd best_x = C.row(order[0]).transpose();
  double best_ei = ei[static_cast<std::size_t>(order[0])];
  for (int t = 0; t < (cfg.refine_top > 0 ? top : 0); ++t) {
    Eigen::VectorXd x = C.row(order[static_cast<std::size_t>(t)]).transpose();
    double fx = ei[static_cast<std::size_t>(order[static_cast<std::size_t>(t)])];
    for (double step : {0.1, 0.05, 0.02, 0.01}) {
      for (int j = 0; j < 8; ++j) {
        for (double sgn : {-1.0, 1.0}) {
          Eigen::VectorXd y = x;
          y(j) = std::clamp(y(j) + sgn * step, 0.0, 1.0);
          const double fy = ei_at(y);
          if (fy > fx) {
            x = y;
            fx = fy;
          }
        }
      }
    }
    if (fx > best_ei) {
      best_ei = fx;
      best_x = x;
    }
  }
  PhiVector u{};
  for (int j = 0; j < 8; ++j) u[static_cast<std::size_t>(j)] = best_x(j);
  return u;
}

}  // namespace detail

/// Initial uniform phi draws, then EI proposals from a GP surrogate fitted in
/// the unit box. Returns the incumbent minimizer and every evaluation.
inline FitResult fit_phi(const ObjectiveFn& objective, const FitConfig& cfg, Rng& rng) {
  cfg.validate();
  FitResult res;
  std::map<std::pair<PhiVector, std::uint64_t>, double> cache;
  std::vector<PhiVector> units;
  std::vector<double> values;
  std::optional<GpHyper> hyper;

  auto evaluate = [&](const PhiVector& unit, int iter) {
    const PhiVector phi = clamp_phi(phi_from_unit(unit));
    const std::uint64_t seed =
        cfg.common_random_numbers ? cfg.seed : mix_seed(cfg.seed, static_cast<std::uint64_t>(iter));
    FitEvaluation e{phi, 0.0, seed, false};
    const auto key = std::make_pair(phi, seed);
    if (auto it = cache.find(key); it != cache.end()) {
      e.value = it->second;
      e.cached = true;
    } else {
      e.value = objective(phi, seed);
      require_finite(e.value, "objective value");
      cache.emplace(key, e.value);
    }
    units.push_back(phi_to_unit(phi));
    values.push_back(e.value);
    if (res.history.empty() || e.value < res.best_value) {
      res.best_value = e.value;
      res.phi_best = phi;
    }
    res.history.push_back(e);
  };

  for (int i = 0; i < cfg.initial; ++i) {
    PhiVector u{};
    for (auto& x : u) x = uniform(rng, 0.0, 1.0);
    evaluate(u, i);
  }
  for (int i = cfg.initial; i < cfg.iterations; ++i) {
    const auto n = static_cast<Eigen::Index>(units.size());
    Eigen::MatrixXd X(n, 8);
    Eigen::VectorXd y(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      X.row(r) = detail::to_eigen(units[static_cast<std::size_t>(r)]).transpose();
      y(r) = values[static_cast<std::size_t>(r)];
    }
    const bool refit = !hyper || (i - cfg.initial) % cfg.refit_every == 0;
    GaussianProcess gp;
    if (refit) {
      GpFitOptions opt = cfg.gp;
      if (hyper) opt.restarts = 0;
      gp = GaussianProcess::fit(X, y, rng, opt, hyper);
      hyper = gp.hyper();
    } else {
      gp = GaussianProcess::with_hyper(X, y, *hyper);
    }
    const PhiVector next = detail::propose_ei(gp, res.best_value, phi_to_unit(res.phi_best), cfg, rng);
    evaluate(next, i);
  }
  return res;
}

/// Groups segments by pair so that each pair's sampled agent parameters are
/// shared across its segments.
inline std::vector<std::vector<std::size_t>> group_segments_by_pair(
    const std::vector<TrajectorySegment>& segments) {
  std::map<std::string, std::vector<std::size_t>> by_pair;
  for (std::size_t i = 0; i < segments.size(); ++i) by_pair[segments[i].pair_id].push_back(i);
  std::vector<std::vector<std::size_t>> out;
  for (auto& [id, idx] : by_pair) out.push_back(std::move(idx));
  return out;
}

struct SegmentRollouts {
  std::size_t segment = 0;
  std::vector<Trajectory> trajectories;
};

/// `reps` rollouts per segment from its recorded initial state. Agent
/// parameters are drawn from `population` once per (pair, rep).
inline std::vector<SegmentRollouts> rollout_segments(const EnvConfig& env_cfg, const Policy& ped,
                                                     const Policy& veh,
                                                     const std::vector<TrajectorySegment>& segments,
                                                     const PopulationSpec& population, int reps,
                                                     double horizon, std::uint64_t seed,
                                                     bool deterministic = false) {
  std::vector<SegmentRollouts> out(segments.size());
  CrossingEnv env(env_cfg);
  RolloutOptions opt{horizon, deterministic};
  const auto groups = group_segments_by_pair(segments);
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    for (int r = 0; r < reps; ++r) {
      Rng prng(mix_seed(seed, 2 * (gi * 1000003ULL + static_cast<std::uint64_t>(r))));
      const auto params = sample_agent_params(population, prng);
      for (std::size_t si : groups[gi]) {
        Rng rng(mix_seed(seed, 2 * (si * 1000003ULL + static_cast<std::uint64_t>(r)) + 1));
        out[si].segment = si;
        out[si].trajectories.push_back(
            run_episode(env, ped, veh, segments[si].initial, population, params, opt, rng));
      }
    }
  }
  return out;
}

/// Metric samples pooled over the rollouts of each segment (trajectories with
/// fewer than 3 states contribute nothing).
inline std::vector<MetricSamples> pooled_model_metrics(const std::vector<SegmentRollouts>& rolls,
                                                       const SceneGeometry& g, double dt) {
  std::vector<MetricSamples> out;
  for (const auto& sr : rolls) {
    MetricSamples pooled;
    for (const auto& tr : sr.trajectories) {
      if (tr.states.size() < 3) continue;
      const auto m = compute_metrics(tr.states, dt, g);
      for (std::size_t k = 0; k < kNumMetrics; ++k)
        pooled[k].insert(pooled[k].end(), m[k].begin(), m[k].end());
    }
    out.push_back(std::move(pooled));
  }
  return out;
}

inline std::vector<MetricSamples> real_segment_metrics(const std::vector<TrajectorySegment>& segments,
                                                       const SceneGeometry& g, double dt) {
  std::vector<MetricSamples> out;
  for (const auto& s : segments) out.push_back(compute_metrics(segment_states(s), dt, g));
  return out;
}

/// Composite NLL of policy rollouts under the real-data KDEs, as a function
/// of phi and the rollout seed.
inline ObjectiveFn make_nll_objective(EnvConfig env_cfg, const Policy& ped, const Policy& veh,
                                      std::vector<TrajectorySegment> segments,
                                      std::vector<GaussianKde1D> real_kdes, int reps, double horizon) {
  return [env_cfg = std::move(env_cfg), &ped, &veh, segments = std::move(segments),
          kdes = std::move(real_kdes), reps, horizon](const PhiVector& phi, std::uint64_t seed) {
    const auto rolls = rollout_segments(env_cfg, ped, veh, segments, to_population_spec(clamp_phi(phi)),
                                        reps, horizon, seed);
    return composite_nll(pooled_model_metrics(rolls, env_cfg.geom, env_cfg.dt), kdes).composite;
  };
}

}  // namespace crossim
