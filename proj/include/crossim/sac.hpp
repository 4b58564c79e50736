#pragma once

// Soft actor-critic: twin critics with Polyak-averaged targets and an
// automatically tuned entropy temperature. Log-probabilities are taken in
// the tanh-squashed unit space; the affine map to action units is constant
// and drops out of every gradient.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <unordered_set>
#include <vector>

#include "crossim/env.hpp"
#include "crossim/nn.hpp"
#include "crossim/policy.hpp"

namespace crossim {

struct SACConfig {
  int iterations = 20000;
  double lr = 1e-3;
  double gamma = 0.995;
  int batch = 8192;
  std::size_t replay_capacity = 1'000'000;
  double tau = 0.005;
  std::optional<double> target_entropy;  // defaults to -(action dims)
  double init_alpha = 1.0;
  std::vector<int> hidden{256, 128, 64};
  int env_steps_per_iter = 1;
  int warmup_steps = 1000;  // uniform-random actions before the first update
  int reward_window = 20;   // episodes in the reported running mean

  void validate() const {
    if (iterations < 0) throw ValidationError("sac.iterations must be >= 0");
    if (!(lr > 0.0)) throw ValidationError("sac.lr must be positive");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("sac.gamma must lie in (0, 1)");
    if (batch <= 0) throw ValidationError("sac.batch must be positive");
    if (replay_capacity == 0) throw ValidationError("sac.replay_capacity must be positive");
    if (!(tau > 0.0 && tau <= 1.0)) throw ValidationError("sac.tau must lie in (0, 1]");
    if (!(init_alpha > 0.0)) throw ValidationError("sac.init_alpha must be positive");
    if (env_steps_per_iter <= 0) throw ValidationError("sac.env_steps_per_iter must be positive");
    if (warmup_steps < 0) throw ValidationError("sac.warmup_steps must be >= 0");
    if (reward_window <= 0) throw ValidationError("sac.reward_window must be positive");
    for (int h : hidden)
      if (h <= 0) throw ValidationError("sac.hidden widths must be positive");
  }
};

struct Transition {
  std::vector<float> obs;
  std::vector<float> action;  // tanh space, [-1, 1]
  float reward = 0.0f;
  std::vector<float> next_obs;
  bool done = false;
};

/// Capacity-bounded FIFO; safe for concurrent push and sample.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ValidationError("replay capacity must be positive");
    data_.reserve(std::min<std::size_t>(capacity, 1 << 16));
  }

  void push(Transition t) {
    std::lock_guard lock(mu_);
    if (data_.size() < capacity_) {
      data_.push_back(std::move(t));
    } else {
      data_[head_] = std::move(t);
      head_ = (head_ + 1) % capacity_;
    }
    ++total_;
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return data_.size();
  }
  std::size_t capacity() const { return capacity_; }
  std::size_t total_pushed() const {
    std::lock_guard lock(mu_);
    return total_;
  }

  /// Uniform without replacement (Floyd's algorithm); returns
  /// min(n, size) transitions.
  std::vector<Transition> sample(std::size_t n, Rng& rng) const {
    std::lock_guard lock(mu_);
    const std::size_t m = data_.size();
    n = std::min(n, m);
    std::vector<Transition> out;
    out.reserve(n);
    if (n == m) {
      out = data_;
      return out;
    }
    std::unordered_set<std::size_t> chosen;
    chosen.reserve(n * 2);
    for (std::size_t j = m - n; j < m; ++j) {
      std::uniform_int_distribution<std::size_t> d(0, j);
      const std::size_t t = d(rng);
      const std::size_t pick = chosen.insert(t).second ? t : j;
      if (pick == j) chosen.insert(j);
      out.push_back(data_[pick]);
    }
    return out;
  }

  /// Items in insertion order, oldest first.
  std::vector<Transition> snapshot() const {
    std::lock_guard lock(mu_);
    std::vector<Transition> out;
    out.reserve(data_.size());
    for (std::size_t i = 0; i < data_.size(); ++i) out.push_back(data_[(head_ + i) % data_.size()]);
    return out;
  }

 private:
  std::size_t capacity_;
  std::vector<Transition> data_;
  std::size_t head_ = 0;
  std::size_t total_ = 0;
  mutable std::mutex mu_;
};

namespace sac {

template <class T>
using Mat = nn::Mat<T>;

inline constexpr double kLogStdMin = GaussianPolicy::kLogStdMin;
inline constexpr double kLogStdMax = GaussianPolicy::kLogStdMax;

template <class T>
T log1m_tanh_sq_t(T u) {
  return static_cast<T>(log1m_tanh_sq(static_cast<double>(u)));
}

/// Reparameterized sample from an actor output (2A x B) and noise (A x B).
template <class T>
struct SquashedSample {
  Mat<T> a;        // tanh(u), A x B
  Mat<T> sigma;    // A x B
  Mat<T> clamped;  // 1 where log_std was clamped
  Eigen::Matrix<T, 1, Eigen::Dynamic> logp;  // per sample, tanh space
};

template <class T>
SquashedSample<T> squash_sample(const Mat<T>& head, const Mat<T>& xi) {
  const Eigen::Index A = xi.rows(), B = xi.cols();
  SquashedSample<T> s;
  s.a.resize(A, B);
  s.sigma.resize(A, B);
  s.clamped.resize(A, B);
  s.logp = Eigen::Matrix<T, 1, Eigen::Dynamic>::Zero(B);
  const T half_log_2pi = static_cast<T>(0.5 * std::log(2.0 * std::numbers::pi));
  for (Eigen::Index b = 0; b < B; ++b) {
    for (Eigen::Index j = 0; j < A; ++j) {
      const T raw = head(A + j, b);
      const T ls = std::clamp(raw, static_cast<T>(kLogStdMin), static_cast<T>(kLogStdMax));
      s.clamped(j, b) = (raw != ls) ? T(1) : T(0);
      const T sig = std::exp(ls);
      const T u = head(j, b) + sig * xi(j, b);
      s.sigma(j, b) = sig;
      s.a(j, b) = std::tanh(u);
      s.logp(b) += -T(0.5) * xi(j, b) * xi(j, b) - ls - half_log_2pi - log1m_tanh_sq_t(u);
    }
  }
  return s;
}

template <class T>
Mat<T> concat_rows(const Mat<T>& top, const Mat<T>& bottom) {
  Mat<T> out(top.rows() + bottom.rows(), top.cols());
  out.topRows(top.rows()) = top;
  out.bottomRows(bottom.rows()) = bottom;
  return out;
}

/// y = r + gamma (1 - done) (min target Q(s', a') - alpha log pi(a'|s')).
template <class T>
Eigen::Matrix<T, 1, Eigen::Dynamic> critic_targets(
    const nn::Mlp<T>& actor, const nn::Mlp<T>& q1_target, const nn::Mlp<T>& q2_target,
    const Mat<T>& next_obs, const Eigen::Matrix<T, 1, Eigen::Dynamic>& reward,
    const Eigen::Matrix<T, 1, Eigen::Dynamic>& done, const Mat<T>& xi, T alpha, T gamma) {
  const auto s = squash_sample(actor.forward(next_obs), xi);
  const Mat<T> in = concat_rows(next_obs, s.a);
  const Mat<T> q1 = q1_target.forward(in), q2 = q2_target.forward(in);
  Eigen::Matrix<T, 1, Eigen::Dynamic> y(reward.size());
  for (Eigen::Index b = 0; b < reward.size(); ++b) {
    const T soft_v = std::min(q1(0, b), q2(0, b)) - alpha * s.logp(b);
    y(b) = reward(b) + gamma * (T(1) - done(b)) * soft_v;
  }
  return y;
}

/// 0.5 mean (Q - y)^2; accumulates parameter gradients into `g`.
template <class T>
T critic_loss_and_grad(const nn::Mlp<T>& q, const Mat<T>& obs_act,
                       const Eigen::Matrix<T, 1, Eigen::Dynamic>& y, nn::Grads<T>& g) {
  nn::ForwardCache<T> cache;
  const Mat<T> out = q.forward(obs_act, &cache);
  const T inv_b = T(1) / static_cast<T>(y.size());
  Mat<T> d = (out.row(0) - y) * inv_b;
  const T loss = T(0.5) * (out.row(0) - y).squaredNorm() * inv_b;
  q.backward(cache, d, g);
  return loss;
}

struct ActorStats {
  double loss = 0.0;
  double mean_logp = 0.0;
};

/// mean(alpha log pi(a|s) - min(Q1, Q2)(s, a)) with a = tanh(mu + sigma xi).
/// Gradients flow into the actor only; critic gradients are discarded.
template <class T>
ActorStats actor_loss_and_grad(const nn::Mlp<T>& actor, const nn::Mlp<T>& q1,
                               const nn::Mlp<T>& q2, const Mat<T>& obs, const Mat<T>& xi,
                               T alpha, nn::Grads<T>& g) {
  const Eigen::Index A = xi.rows(), B = xi.cols();
  nn::ForwardCache<T> acache;
  const Mat<T> head = actor.forward(obs, &acache);
  const auto s = squash_sample(head, xi);
  const Mat<T> in = concat_rows(obs, s.a);
  nn::ForwardCache<T> c1, c2;
  const Mat<T> v1 = q1.forward(in, &c1), v2 = q2.forward(in, &c2);
  const T inv_b = T(1) / static_cast<T>(B);

  Mat<T> d1 = Mat<T>::Zero(1, B), d2 = Mat<T>::Zero(1, B);
  double loss = 0.0;
  for (Eigen::Index b = 0; b < B; ++b) {
    const bool first = v1(0, b) <= v2(0, b);
    (first ? d1 : d2)(0, b) = -inv_b;
    loss += static_cast<double>(alpha * s.logp(b) - std::min(v1(0, b), v2(0, b)));
  }
  auto scratch1 = q1.zero_grads();
  auto scratch2 = q2.zero_grads();
  const Mat<T> gin1 = q1.backward(c1, d1, scratch1);
  const Mat<T> gin2 = q2.backward(c2, d2, scratch2);
  const Mat<T> gq = gin1.bottomRows(A) + gin2.bottomRows(A);  // dL/da

  Mat<T> dhead(2 * A, B);
  for (Eigen::Index b = 0; b < B; ++b) {
    for (Eigen::Index j = 0; j < A; ++j) {
      const T a = s.a(j, b);
      const T du = gq(j, b) * (T(1) - a * a) + alpha * inv_b * T(2) * a;
      dhead(j, b) = du;
      dhead(A + j, b) =
          s.clamped(j, b) > T(0) ? T(0) : du * s.sigma(j, b) * xi(j, b) - alpha * inv_b;
    }
  }
  actor.backward(acache, dhead, g);
  return {loss / static_cast<double>(B), static_cast<double>(s.logp.mean())};
}

}  // namespace sac

/// One learner: actor, twin critics, their targets and the temperature.
class SacAgent {
 public:
  SacAgent(ObservationLayout layout, ActionSpec spec, const SACConfig& cfg, Rng& rng)
      : cfg_(cfg),
        actor_(GaussianPolicy::create(layout, spec, cfg.hidden, rng)),
        buffer_(cfg.replay_capacity),
        log_alpha_(std::log(cfg.init_alpha)),
        alpha_opt_(cfg.lr) {
    std::vector<int> qs{static_cast<int>(layout.size() + spec.size())};
    qs.insert(qs.end(), cfg.hidden.begin(), cfg.hidden.end());
    qs.push_back(1);
    q1_ = nn::Mlp<float>(qs, rng);
    q2_ = nn::Mlp<float>(qs, rng);
    q1_t_ = q1_;
    q2_t_ = q2_;
    actor_opt_ = nn::Adam<float>(actor_.net(), cfg.lr);
    q1_opt_ = nn::Adam<float>(q1_, cfg.lr);
    q2_opt_ = nn::Adam<float>(q2_, cfg.lr);
    target_entropy_ = cfg.target_entropy.value_or(-static_cast<double>(spec.size()));
  }

  const GaussianPolicy& policy() const { return actor_; }
  GaussianPolicy& policy() { return actor_; }
  ReplayBuffer& buffer() { return buffer_; }
  double alpha() const { return std::exp(log_alpha_); }
  std::size_t action_size() const { return actor_.action_spec().size(); }

  struct UpdateStats {
    double critic_loss = 0.0;
    double actor_loss = 0.0;
    double alpha = 0.0;
  };

  /// One gradient step on a sampled batch. Throws if the critic loss is not
  /// finite.
  UpdateStats update(Rng& rng) {
    const auto batch = buffer_.sample(static_cast<std::size_t>(cfg_.batch), rng);
    if (batch.empty()) throw ContractError("SAC update on an empty replay buffer");
    const auto B = static_cast<Eigen::Index>(batch.size());
    const auto O = static_cast<Eigen::Index>(batch[0].obs.size());
    const auto A = static_cast<Eigen::Index>(batch[0].action.size());
    nn::Mat<float> obs(O, B), next(O, B), act(A, B);
    Eigen::Matrix<float, 1, Eigen::Dynamic> rew(B), done(B);
    for (Eigen::Index b = 0; b < B; ++b) {
      const auto& t = batch[static_cast<std::size_t>(b)];
      for (Eigen::Index i = 0; i < O; ++i) {
        obs(i, b) = t.obs[static_cast<std::size_t>(i)];
        next(i, b) = t.next_obs[static_cast<std::size_t>(i)];
      }
      for (Eigen::Index j = 0; j < A; ++j) act(j, b) = t.action[static_cast<std::size_t>(j)];
      rew(b) = t.reward;
      done(b) = t.done ? 1.0f : 0.0f;
    }
    const auto alpha = static_cast<float>(this->alpha());
    const auto y = sac::critic_targets(actor_.net(), q1_t_, q2_t_, next, rew, done,
                                       gaussian_noise(A, B, rng), alpha,
                                       static_cast<float>(cfg_.gamma));
    const nn::Mat<float> in = sac::concat_rows(obs, act);
    auto g1 = q1_.zero_grads();
    auto g2 = q2_.zero_grads();
    const double l1 = sac::critic_loss_and_grad(q1_, in, y, g1);
    const double l2 = sac::critic_loss_and_grad(q2_, in, y, g2);
    if (!std::isfinite(l1) || !std::isfinite(l2))
      throw DomainError("SAC critic loss became non-finite; training diverged");
    q1_opt_.step(q1_, g1);
    q2_opt_.step(q2_, g2);

    auto ga = actor_.net().zero_grads();
    const auto st = sac::actor_loss_and_grad(actor_.net(), q1_, q2_, obs,
                                             gaussian_noise(A, B, rng), alpha, ga);
    actor_opt_.step(actor_.net(), ga);

    // d/d(log alpha) of -log_alpha * (log pi + H_target), averaged.
    log_alpha_ = alpha_opt_.step(log_alpha_, -(st.mean_logp + target_entropy_));
    log_alpha_ = std::clamp(log_alpha_, -20.0, 5.0);

    q1_t_.soft_update(q1_, static_cast<float>(cfg_.tau));
    q2_t_.soft_update(q2_, static_cast<float>(cfg_.tau));
    return {0.5 * (l1 + l2), st.loss, this->alpha()};
  }

 private:
  static nn::Mat<float> gaussian_noise(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    std::normal_distribution<float> d(0.0f, 1.0f);
    nn::Mat<float> m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
      for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = d(rng);
    return m;
  }

  SACConfig cfg_;
  GaussianPolicy actor_;
  nn::Mlp<float> q1_, q2_, q1_t_, q2_t_;
  nn::Adam<float> actor_opt_, q1_opt_, q2_opt_;
  ReplayBuffer buffer_;
  double log_alpha_;
  nn::ScalarAdam alpha_opt_;
  double target_entropy_ = -1.0;
};

/// Everything needed to start one training episode.
struct EpisodeSpec {
  WorldState init;
  PopulationSpec population;
  NonPolicyParams params;
};

using EpisodeSampler = std::function<EpisodeSpec(Rng&)>;

/// Pedestrian near the kerb heading for the far side, vehicle approaching
/// from upstream; population spec and agent parameters resampled per episode.
inline EpisodeSampler default_episode_sampler(const SceneGeometry& g = {}) {
  return [g](Rng& rng) {
    EpisodeSpec e;
    e.init.ped_x = uniform(rng, -g.crossing_half_width_x, g.crossing_half_width_x);
    e.init.ped_y = uniform(rng, g.kerb_y - 3.0, g.kerb_y - 0.5);
    e.init.ped_speed = uniform(rng, 0.5, 1.6);
    e.init.ped_heading = 0.0;
    e.init.veh_x = uniform(rng, -25.0, -8.0);
    e.init.veh_y = g.veh_lane_y;
    e.init.veh_speed = uniform(rng, 4.0, 10.0);
    e.population = sample_population_spec(rng);
    e.params = sample_agent_params(e.population, rng);
    return e;
  };
}

/// Initial states from a fitted KDE, population spec resampled per episode.
inline EpisodeSampler kde_episode_sampler(InitialConditionModel kde, const SceneGeometry& g = {},
                                          InitialStateBounds bounds = {}) {
  return [kde = std::move(kde), g, bounds](Rng& rng) {
    EpisodeSpec e;
    e.init = sample_initial_state(kde, g, rng, bounds);
    e.population = sample_population_spec(rng);
    e.params = sample_agent_params(e.population, rng);
    return e;
  };
}

struct RewardCurvePoint {
  int iteration = 0;
  double ped_mean = 0.0;  // running mean over the last completed episodes
  double veh_mean = 0.0;
  int episodes = 0;
};

struct SacResult {
  GaussianPolicy ped;
  GaussianPolicy veh;
  std::vector<RewardCurvePoint> reward_curve;
};

/// Trains the pedestrian and vehicle policies simultaneously, each from its
/// own replay buffer.
inline SacResult sac_train(const EnvConfig& env_cfg, const EpisodeSampler& sampler,
                           const SACConfig& cfg, Rng& rng) {
  cfg.validate();
  CrossingEnv env(env_cfg);
  SacAgent ped(env.ped_obs_layout(), ped_action_spec(env_cfg.variant), cfg, rng);
  SacAgent veh(env.veh_obs_layout(), veh_action_spec(env_cfg.variant), cfg, rng);

  SacResult res;
  res.reward_curve.reserve(static_cast<std::size_t>(cfg.iterations));
  std::vector<double> ped_returns, veh_returns;
  double ped_ret = 0.0, veh_ret = 0.0;
  bool need_reset = true;
  long long env_steps = 0;

  auto to_float = [](const std::vector<double>& v) { return std::vector<float>(v.begin(), v.end()); };
  auto window_mean = [&](const std::vector<double>& r, double current) {
    if (r.empty()) return current;
    const std::size_t n = std::min<std::size_t>(r.size(), static_cast<std::size_t>(cfg.reward_window));
    double s = 0.0;
    for (std::size_t i = r.size() - n; i < r.size(); ++i) s += r[i];
    return s / static_cast<double>(n);
  };

  for (int it = 0; it < cfg.iterations; ++it) {
    for (int k = 0; k < cfg.env_steps_per_iter; ++k) {
      if (need_reset) {
        const auto e = sampler(rng);
        env.reset(e.init, e.population, e.params, rng);
        ped_ret = veh_ret = 0.0;
        need_reset = false;
      }
      const bool ped_active = !env.flags().ped_done();
      const bool veh_active = !env.flags().veh_done();
      const auto op = env.ped_observation();
      const auto ov = env.veh_observation();
      std::vector<double> up, uv;
      if (env_steps < cfg.warmup_steps) {
        up.resize(ped.action_size());
        uv.resize(veh.action_size());
        for (auto& a : up) a = uniform(rng, -1.0, 1.0);
        for (auto& a : uv) a = uniform(rng, -1.0, 1.0);
      } else {
        up = ped.policy().act_unit(op, false, rng);
        uv = veh.policy().act_unit(ov, false, rng);
      }
      std::vector<double> ap(up.size()), av(uv.size());
      for (std::size_t j = 0; j < up.size(); ++j) ap[j] = ped.policy().action_spec().from_unit(j, up[j]);
      for (std::size_t j = 0; j < uv.size(); ++j) av[j] = veh.policy().action_spec().from_unit(j, uv[j]);
      const auto r = env.step(ap, av, rng);
      ++env_steps;
      ped_ret += r.reward.ped.total();
      veh_ret += r.reward.veh.total();
      const auto np = env.ped_observation();
      const auto nv = env.veh_observation();
      if (ped_active)
        ped.buffer().push({to_float(op), to_float(up), static_cast<float>(r.reward.ped.total()),
                           to_float(np), r.ped_terminal});
      if (veh_active)
        veh.buffer().push({to_float(ov), to_float(uv), static_cast<float>(r.reward.veh.total()),
                           to_float(nv), r.veh_terminal});
      if (r.episode_done) {
        ped_returns.push_back(ped_ret);
        veh_returns.push_back(veh_ret);
        need_reset = true;
      }
    }
    if (env_steps >= cfg.warmup_steps) {
      if (ped.buffer().size() > 0) ped.update(rng);
      if (veh.buffer().size() > 0) veh.update(rng);
    }
    res.reward_curve.push_back({it + 1, window_mean(ped_returns, ped_ret),
                                window_mean(veh_returns, veh_ret),
                                static_cast<int>(ped_returns.size())});
  }
  res.ped = ped.policy();
  res.veh = veh.policy();
  return res;
}

}  // namespace crossim
