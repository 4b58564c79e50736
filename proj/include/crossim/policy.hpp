#pragma once

// Policies map normalized observations to bounded actions. Stochastic
// policies sample a Gaussian in an unbounded space and squash it with tanh
// onto the action box; deterministic calls squash the mean.

#include <cmath>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "crossim/core.hpp"
#include "crossim/nn.hpp"
#include "crossim/observe.hpp"

namespace crossim {

struct ActionDim {
  std::string name;
  Range range;
};

struct ActionSpec {
  std::vector<ActionDim> dims;

  std::size_t size() const { return dims.size(); }

  /// [-1, 1] -> action units.
  double from_unit(std::size_t i, double a) const {
    const auto& r = dims[i].range;
    return r.lo + 0.5 * (std::clamp(a, -1.0, 1.0) + 1.0) * r.width();
  }
  double to_unit(std::size_t i, double v) const {
    const auto& r = dims[i].range;
    return 2.0 * (r.clamp(v) - r.lo) / r.width() - 1.0;
  }
};

inline ActionSpec ped_action_spec(Variant v) {
  ActionSpec s;
  s.dims.push_back({"speed", {0.0, 3.0}});
  s.dims.push_back({"delta_heading", {-0.5, 0.5}});
  if (has_visual(v)) s.dims.push_back({"gaze_offset", {-0.5 * std::numbers::pi, 0.5 * std::numbers::pi}});
  return s;
}

inline ActionSpec veh_action_spec(Variant) {
  ActionSpec s;
  s.dims.push_back({"target_accel", {-5.0, 3.0}});
  return s;
}

inline ActionSpec action_spec_for(AgentKind agent, Variant v) {
  return agent == AgentKind::Pedestrian ? ped_action_spec(v) : veh_action_spec(v);
}

/// log(1 - tanh(u)^2), stable for large |u|.
inline double log1m_tanh_sq(double u) {
  const double x = -2.0 * u;
  const double softplus = x > 30.0 ? x : std::log1p(std::exp(x));
  return 2.0 * (std::numbers::ln2 - u - softplus);
}

/// Log-density of the squashed Gaussian in action units, given the pre-squash
/// sample u ~ N(mean, std). Includes the tanh and affine Jacobians.
inline double squashed_log_prob(std::span<const double> u, std::span<const double> mean,
                                std::span<const double> log_std, const ActionSpec& spec) {
  double lp = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    const double z = (u[j] - mean[j]) / std::exp(log_std[j]);
    lp += -0.5 * z * z - log_std[j] - 0.5 * std::log(2.0 * std::numbers::pi);
    lp -= log1m_tanh_sq(u[j]);
    lp -= std::log(0.5 * spec.dims[j].range.width());
  }
  return lp;
}

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::vector<double> act(std::span<const double> obs, bool deterministic,
                                  Rng& rng) const = 0;
  virtual const ObservationLayout& layout() const = 0;
  virtual const ActionSpec& action_spec() const = 0;
};

/// Actor network output is [mean (A); log_std (A)].
class GaussianPolicy : public Policy {
 public:
  static constexpr double kLogStdMin = -5.0;
  static constexpr double kLogStdMax = 2.0;

  GaussianPolicy() = default;
  GaussianPolicy(ObservationLayout layout, ActionSpec spec, nn::Mlp<float> net)
      : layout_(std::move(layout)), spec_(std::move(spec)), net_(std::move(net)) {
    if (net_.input_size() != static_cast<int>(layout_.size()) ||
        net_.output_size() != 2 * static_cast<int>(spec_.size()))
      throw ContractError("actor network shape does not match layout/action spec");
  }

  static GaussianPolicy create(ObservationLayout layout, ActionSpec spec,
                               const std::vector<int>& hidden, Rng& rng) {
    std::vector<int> sizes{static_cast<int>(layout.size())};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(2 * static_cast<int>(spec.size()));
    return GaussianPolicy(std::move(layout), std::move(spec), nn::Mlp<float>(sizes, rng));
  }

  /// Action in [-1, 1]^A (tanh space).
  std::vector<double> act_unit(std::span<const double> obs, bool deterministic, Rng& rng) const {
    if (obs.size() != layout_.size()) throw ContractError("observation width does not match layout");
    nn::Mat<float> x(static_cast<Eigen::Index>(obs.size()), 1);
    for (std::size_t i = 0; i < obs.size(); ++i) x(static_cast<Eigen::Index>(i), 0) = static_cast<float>(obs[i]);
    const nn::Mat<float> out = net_.forward(x);
    const std::size_t a = spec_.size();
    std::vector<double> unit(a);
    for (std::size_t j = 0; j < a; ++j) {
      double u = out(static_cast<Eigen::Index>(j), 0);
      if (!deterministic) {
        const double ls = std::clamp<double>(out(static_cast<Eigen::Index>(a + j), 0), kLogStdMin, kLogStdMax);
        u += std::exp(ls) * normal(rng);
      }
      unit[j] = std::tanh(u);
    }
    return unit;
  }

  std::vector<double> act(std::span<const double> obs, bool deterministic, Rng& rng) const override {
    auto unit = act_unit(obs, deterministic, rng);
    for (std::size_t j = 0; j < unit.size(); ++j) unit[j] = spec_.from_unit(j, unit[j]);
    return unit;
  }

  const ObservationLayout& layout() const override { return layout_; }
  const ActionSpec& action_spec() const override { return spec_; }
  const nn::Mlp<float>& net() const { return net_; }
  nn::Mlp<float>& net() { return net_; }

 private:
  ObservationLayout layout_;
  ActionSpec spec_;
  nn::Mlp<float> net_;
};

/// Deterministic regression policy; outputs are clipped to the action box.
class BcPolicy : public Policy {
 public:
  BcPolicy() = default;
  BcPolicy(ObservationLayout layout, ActionSpec spec, nn::Mlp<float> net)
      : layout_(std::move(layout)), spec_(std::move(spec)), net_(std::move(net)) {
    if (net_.input_size() != static_cast<int>(layout_.size()) ||
        net_.output_size() != static_cast<int>(spec_.size()))
      throw ContractError("BC network shape does not match layout/action spec");
  }

  std::vector<double> predict(std::span<const double> obs) const {
    if (obs.size() != layout_.size()) throw ContractError("observation width does not match layout");
    nn::Mat<float> x(static_cast<Eigen::Index>(obs.size()), 1);
    for (std::size_t i = 0; i < obs.size(); ++i) x(static_cast<Eigen::Index>(i), 0) = static_cast<float>(obs[i]);
    const nn::Mat<float> out = net_.forward(x);
    std::vector<double> a(spec_.size());
    for (std::size_t j = 0; j < a.size(); ++j) a[j] = out(static_cast<Eigen::Index>(j), 0);
    return a;
  }

  std::vector<double> act(std::span<const double> obs, bool, Rng&) const override {
    auto a = predict(obs);
    for (std::size_t j = 0; j < a.size(); ++j) a[j] = spec_.dims[j].range.clamp(a[j]);
    return a;
  }

  const ObservationLayout& layout() const override { return layout_; }
  const ActionSpec& action_spec() const override { return spec_; }
  const nn::Mlp<float>& net() const { return net_; }

 private:
  ObservationLayout layout_;
  ActionSpec spec_;
  nn::Mlp<float> net_;
};

/// Uniform over the action box; the untrained baseline.
class RandomPolicy : public Policy {
 public:
  RandomPolicy(ObservationLayout layout, ActionSpec spec)
      : layout_(std::move(layout)), spec_(std::move(spec)) {}

  std::vector<double> act(std::span<const double>, bool, Rng& rng) const override {
    std::vector<double> a(spec_.size());
    for (std::size_t j = 0; j < a.size(); ++j)
      a[j] = uniform(rng, spec_.dims[j].range.lo, spec_.dims[j].range.hi);
    return a;
  }

  const ObservationLayout& layout() const override { return layout_; }
  const ActionSpec& action_spec() const override { return spec_; }

 private:
  ObservationLayout layout_;
  ActionSpec spec_;
};

}  // namespace crossim
