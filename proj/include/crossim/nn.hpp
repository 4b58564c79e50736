#pragma once

// Small dense networks with manual backpropagation. Batches are stored
// column-wise: an input batch is (features x batch).

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "crossim/core.hpp"

namespace crossim::nn {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <class T>
struct Layer {
  Mat<T> w;  // out x in
  Vec<T> b;
};

template <class T>
struct Grads {
  std::vector<Mat<T>> dw;
  std::vector<Vec<T>> db;

  void scale(T s) {
    for (auto& m : dw) m *= s;
    for (auto& v : db) v *= s;
  }
};

template <class T>
struct ForwardCache {
  std::vector<Mat<T>> inputs;  // input to each layer (post-activation of the previous one)
};

/// Fully connected network, ReLU on hidden layers, linear output.
template <class T>
class Mlp {
 public:
  Mlp() = default;

  /// `sizes` = {in, hidden..., out}. Uniform(+-1/sqrt(fan_in)) init.
  Mlp(const std::vector<int>& sizes, Rng& rng) {
    if (sizes.size() < 2) throw ContractError("MLP needs at least input and output sizes");
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
      const int in = sizes[i], out = sizes[i + 1];
      if (in <= 0 || out <= 0) throw ContractError("MLP layer sizes must be positive");
      const double bound = 1.0 / std::sqrt(static_cast<double>(in));
      std::uniform_real_distribution<double> u(-bound, bound);
      Layer<T> l{Mat<T>(out, in), Vec<T>(out)};
      for (Eigen::Index c = 0; c < l.w.cols(); ++c)
        for (Eigen::Index r = 0; r < l.w.rows(); ++r) l.w(r, c) = static_cast<T>(u(rng));
      for (Eigen::Index r = 0; r < l.b.size(); ++r) l.b(r) = static_cast<T>(u(rng));
      layers_.push_back(std::move(l));
    }
  }

  explicit Mlp(std::vector<Layer<T>> layers) : layers_(std::move(layers)) {}

  int input_size() const { return static_cast<int>(layers_.front().w.cols()); }
  int output_size() const { return static_cast<int>(layers_.back().w.rows()); }
  std::size_t depth() const { return layers_.size(); }
  const std::vector<Layer<T>>& layers() const { return layers_; }
  std::vector<Layer<T>>& layers() { return layers_; }

  std::vector<int> sizes() const {
    std::vector<int> s{input_size()};
    for (const auto& l : layers_) s.push_back(static_cast<int>(l.w.rows()));
    return s;
  }

  Mat<T> forward(const Mat<T>& x, ForwardCache<T>* cache = nullptr) const {
    if (x.rows() != input_size()) throw ContractError("MLP input width mismatch");
    if (cache) cache->inputs.clear();
    Mat<T> h = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      if (cache) cache->inputs.push_back(h);
      Mat<T> z = layers_[i].w * h;
      z.colwise() += layers_[i].b;
      if (i + 1 < layers_.size()) z = z.cwiseMax(T(0));
      h = std::move(z);
    }
    return h;
  }

  Grads<T> zero_grads() const {
    Grads<T> g;
    for (const auto& l : layers_) {
      g.dw.push_back(Mat<T>::Zero(l.w.rows(), l.w.cols()));
      g.db.push_back(Vec<T>::Zero(l.b.size()));
    }
    return g;
  }

  /// Accumulates parameter gradients into `g` and returns dLoss/dInput.
  Mat<T> backward(const ForwardCache<T>& cache, const Mat<T>& d_out, Grads<T>& g) const {
    Mat<T> delta = d_out;
    for (std::size_t k = layers_.size(); k-- > 0;) {
      const Mat<T>& in = cache.inputs[k];
      g.dw[k].noalias() += delta * in.transpose();
      g.db[k] += delta.rowwise().sum();
      Mat<T> d_in = layers_[k].w.transpose() * delta;
      if (k > 0) d_in = d_in.cwiseProduct((in.array() > T(0)).template cast<T>().matrix());
      delta = std::move(d_in);
    }
    return delta;
  }

  /// Polyak averaging: this <- (1 - tau) this + tau src.
  void soft_update(const Mlp& src, T tau) {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      layers_[i].w = (T(1) - tau) * layers_[i].w + tau * src.layers_[i].w;
      layers_[i].b = (T(1) - tau) * layers_[i].b + tau * src.layers_[i].b;
    }
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.w.size() + l.b.size());
    return n;
  }

  std::vector<T> flatten() const {
    std::vector<T> out;
    out.reserve(parameter_count());
    for (const auto& l : layers_) {
      out.insert(out.end(), l.w.data(), l.w.data() + l.w.size());
      out.insert(out.end(), l.b.data(), l.b.data() + l.b.size());
    }
    return out;
  }

  void unflatten(const std::vector<T>& p) {
    if (p.size() != parameter_count()) throw ContractError("parameter vector size mismatch");
    std::size_t k = 0;
    for (auto& l : layers_) {
      for (Eigen::Index i = 0; i < l.w.size(); ++i) l.w.data()[i] = p[k++];
      for (Eigen::Index i = 0; i < l.b.size(); ++i) l.b.data()[i] = p[k++];
    }
  }

  static std::vector<T> flatten(const Grads<T>& g) {
    std::vector<T> out;
    for (std::size_t i = 0; i < g.dw.size(); ++i) {
      out.insert(out.end(), g.dw[i].data(), g.dw[i].data() + g.dw[i].size());
      out.insert(out.end(), g.db[i].data(), g.db[i].data() + g.db[i].size());
    }
    return out;
  }

 private:
  std::vector<Layer<T>> layers_;
};

template <class T>
class Adam {
 public:
  Adam() = default;
  Adam(const Mlp<T>& net, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps), m_(net.zero_grads()), v_(net.zero_grads()) {}

  void step(Mlp<T>& net, const Grads<T>& g) {
    ++t_;
    const T c1 = static_cast<T>(1.0 - std::pow(b1_, t_));
    const T c2 = static_cast<T>(1.0 - std::pow(b2_, t_));
    const T lr = static_cast<T>(lr_), b1 = static_cast<T>(b1_), b2 = static_cast<T>(b2_),
            eps = static_cast<T>(eps_);
    auto& layers = net.layers();
    for (std::size_t i = 0; i < layers.size(); ++i) {
      update(layers[i].w, g.dw[i], m_.dw[i], v_.dw[i], lr, b1, b2, eps, c1, c2);
      update(layers[i].b, g.db[i], m_.db[i], v_.db[i], lr, b1, b2, eps, c1, c2);
    }
  }

  double learning_rate() const { return lr_; }

 private:
  template <class M>
  static void update(M& p, const M& g, M& m, M& v, T lr, T b1, T b2, T eps, T c1, T c2) {
    m = b1 * m + (T(1) - b1) * g;
    v = b2 * v + (T(1) - b2) * g.cwiseProduct(g);
    p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }

  double lr_ = 1e-3, b1_ = 0.9, b2_ = 0.999, eps_ = 1e-8;
  int t_ = 0;
  Grads<T> m_, v_;
};

/// Adam for a single scalar parameter (entropy temperature).
class ScalarAdam {
 public:
  explicit ScalarAdam(double lr = 1e-3) : lr_(lr) {}
  double step(double param, double grad) {
    ++t_;
    m_ = 0.9 * m_ + 0.1 * grad;
    v_ = 0.999 * v_ + 0.001 * grad * grad;
    const double mh = m_ / (1.0 - std::pow(0.9, t_));
    const double vh = v_ / (1.0 - std::pow(0.999, t_));
    return param - lr_ * mh / (std::sqrt(vh) + 1e-8);
  }

 private:
  double lr_;
  double m_ = 0.0, v_ = 0.0;
  int t_ = 0;
};

}  // namespace crossim::nn
