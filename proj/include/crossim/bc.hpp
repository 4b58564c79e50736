#pragma once

// Behavioural cloning: per-agent regression from NC-layout observations to
// the next action.

#include <algorithm>
#include <numeric>
#include <vector>

#include "crossim/data.hpp"
#include "crossim/nn.hpp"
#include "crossim/observe.hpp"
#include "crossim/params.hpp"
#include "crossim/policy.hpp"

namespace crossim {

struct BCConfig {
  std::vector<int> hidden{64, 64};
  double lr = 1e-3;
  int ped_epochs = 200;
  int veh_epochs = 15000;
  int batch = 256;

  void validate() const {
    if (ped_epochs <= 0 || veh_epochs <= 0) throw ValidationError("bc epochs must be positive");
    if (!(lr > 0.0)) throw ValidationError("bc.lr must be positive");
    if (batch <= 0) throw ValidationError("bc.batch must be positive");
    for (int h : hidden)
      if (h <= 0) throw ValidationError("bc.hidden widths must be positive");
  }
};

struct Demonstrations {
  std::vector<std::vector<double>> obs;
  std::vector<std::vector<double>> actions;

  std::size_t size() const { return obs.size(); }
};

struct BcFit {
  nn::Mlp<float> net;
  std::vector<double> loss_curve;  // mean squared error per epoch
};

/// Minibatch Adam regression with mean squared error.
inline BcFit bc_fit(const Demonstrations& d, const std::vector<int>& hidden, double lr, int epochs,
                    int batch, Rng& rng) {
  if (d.size() == 0) throw ValidationError("behavioural cloning needs a non-empty dataset");
  if (d.obs.size() != d.actions.size()) throw ValidationError("demonstration obs/action counts differ");
  const auto O = static_cast<Eigen::Index>(d.obs[0].size());
  const auto A = static_cast<Eigen::Index>(d.actions[0].size());
  const auto N = static_cast<Eigen::Index>(d.size());
  nn::Mat<float> X(O, N), Y(A, N);
  for (Eigen::Index i = 0; i < N; ++i) {
    const auto& o = d.obs[static_cast<std::size_t>(i)];
    const auto& a = d.actions[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(o.size()) != O || static_cast<Eigen::Index>(a.size()) != A)
      throw ValidationError("demonstrations have inconsistent widths");
    for (Eigen::Index r = 0; r < O; ++r) X(r, i) = static_cast<float>(o[static_cast<std::size_t>(r)]);
    for (Eigen::Index r = 0; r < A; ++r) Y(r, i) = static_cast<float>(a[static_cast<std::size_t>(r)]);
  }
  std::vector<int> sizes{static_cast<int>(O)};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(static_cast<int>(A));
  BcFit out{nn::Mlp<float>(sizes, rng), {}};
  nn::Adam<float> opt(out.net, lr);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(N));
  std::iota(idx.begin(), idx.end(), 0);
  const Eigen::Index B = std::min<Eigen::Index>(batch, N);
  const float scale = 1.0f / static_cast<float>(A);
  for (int e = 0; e < epochs; ++e) {
    std::shuffle(idx.begin(), idx.end(), rng);
    double sse = 0.0;
    for (Eigen::Index start = 0; start < N; start += B) {
      const Eigen::Index m = std::min(B, N - start);
      nn::Mat<float> xb(O, m), yb(A, m);
      for (Eigen::Index c = 0; c < m; ++c) {
        xb.col(c) = X.col(idx[static_cast<std::size_t>(start + c)]);
        yb.col(c) = Y.col(idx[static_cast<std::size_t>(start + c)]);
      }
      nn::ForwardCache<float> cache;
      const nn::Mat<float> diff = out.net.forward(xb, &cache) - yb;
      sse += static_cast<double>(diff.squaredNorm());
      auto g = out.net.zero_grads();
      out.net.backward(cache, diff * (2.0f * scale / static_cast<float>(m)), g);
      opt.step(out.net, g);
    }
    out.loss_curve.push_back(sse / static_cast<double>(N * A));
  }
  return out;
}

inline double bc_mse(const nn::Mlp<float>& net, const Demonstrations& d) {
  double sse = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    nn::Mat<float> x(static_cast<Eigen::Index>(d.obs[i].size()), 1);
    for (std::size_t r = 0; r < d.obs[i].size(); ++r) x(static_cast<Eigen::Index>(r), 0) = static_cast<float>(d.obs[i][r]);
    const nn::Mat<float> y = net.forward(x);
    for (std::size_t j = 0; j < d.actions[i].size(); ++j) {
      const double e = y(static_cast<Eigen::Index>(j), 0) - d.actions[i][j];
      sse += e * e;
      ++count;
    }
  }
  return sse / static_cast<double>(count);
}

/// Demonstrations from aligned pairs on the NC layout. The pedestrian's action
/// is (next speed, heading change); the vehicle's is its acceleration. Every
/// parameter slot of the observation holds the midpoint of its range.
inline std::pair<Demonstrations, Demonstrations> bc_demonstrations(
    const std::vector<InteractionPair>& pairs, const ObservationBounds& bounds = {}) {
  const PopulationSpec pop = to_population_spec(phi_midpoint());
  const NonPolicyParams own{pop.nu_ped.mu, pop.nu_veh.mu, pop.w_ped.mu, pop.w_veh.mu};
  Demonstrations ped, veh;
  for (const auto& p : pairs) {
    for (std::size_t k = 0; k + 1 < p.samples.size(); ++k) {
      const WorldState s = to_world_state(p.samples[k], p.t_start);
      const auto& nx = p.samples[k + 1];
      ped.obs.push_back(build_ped_observation(s, std::nullopt, std::nullopt, own, pop, Variant::NC, bounds));
      ped.actions.push_back({nx.ped_speed, wrap_angle(nx.ped_heading - s.ped_heading)});
      veh.obs.push_back(build_veh_observation(s, std::nullopt, s.veh_accel, own, pop, Variant::NC, bounds));
      veh.actions.push_back({p.samples[k].veh_accel});
    }
  }
  return {std::move(ped), std::move(veh)};
}

struct BcResult {
  BcPolicy ped;
  BcPolicy veh;
  std::vector<double> ped_loss;
  std::vector<double> veh_loss;
};

inline BcResult bc_train(const Demonstrations& ped, const Demonstrations& veh, const BCConfig& cfg,
                         Rng& rng, const ObservationBounds& bounds = {}) {
  cfg.validate();
  auto fp = bc_fit(ped, cfg.hidden, cfg.lr, cfg.ped_epochs, cfg.batch, rng);
  auto fv = bc_fit(veh, cfg.hidden, cfg.lr, cfg.veh_epochs, cfg.batch, rng);
  BcResult r{BcPolicy(ped_layout(Variant::NC, bounds), ped_action_spec(Variant::NC), std::move(fp.net)),
             BcPolicy(veh_layout(Variant::NC, bounds), veh_action_spec(Variant::NC), std::move(fv.net)),
             std::move(fp.loss_curve), std::move(fv.loss_curve)};
  return r;
}

}  // namespace crossim
