#pragma once

// Gaussian-process regression with a Matern-5/2 ARD kernel, and expected
// improvement for minimization. Inputs are expected in the unit box; targets
// are standardized internally.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "crossim/core.hpp"

namespace crossim {

struct GpHyper {
  Eigen::VectorXd log_lengthscale;
  double log_signal_var = 0.0;
  double log_noise_var = std::log(1e-4);
};

struct GpPrediction {
  double mean = 0.0;
  double std = 0.0;
};

struct GpFitOptions {
  int restarts = 3;  // random starts in addition to the warm start / default
  int steps = 80;
  double lr = 0.05;
  double min_log_ls = std::log(1e-2), max_log_ls = std::log(20.0);
  double min_log_sv = std::log(1e-2), max_log_sv = std::log(20.0);
  double min_log_nv = std::log(1e-6), max_log_nv = std::log(1.0);
};

class GaussianProcess {
 public:
  static double matern52(double r) {
    const double s5r = std::sqrt(5.0) * r;
    return (1.0 + s5r + 5.0 * r * r / 3.0) * std::exp(-s5r);
  }

  /// Fits hyperparameters by maximizing the log marginal likelihood
  /// (gradient ascent in log space from several starts).
  static GaussianProcess fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Rng& rng,
                             const GpFitOptions& opt = {},
                             const std::optional<GpHyper>& warm = std::nullopt) {
    if (X.rows() < 2 || X.rows() != y.size()) throw ValidationError("GP fit needs >= 2 matching points");
    for (Eigen::Index i = 0; i < y.size(); ++i) require_finite(y(i), "GP target");
    GaussianProcess gp;
    gp.X_ = X;
    gp.y_mean_ = y.mean();
    const double var = (y.array() - gp.y_mean_).square().sum() / std::max<double>(1.0, static_cast<double>(y.size() - 1));
    gp.y_scale_ = var > 1e-24 ? std::sqrt(var) : 1.0;
    gp.z_ = (y.array() - gp.y_mean_) / gp.y_scale_;

    const auto d = X.cols();
    std::vector<GpHyper> starts;
    if (warm && warm->log_lengthscale.size() == d) starts.push_back(*warm);
    GpHyper def;
    def.log_lengthscale = Eigen::VectorXd::Constant(d, std::log(0.3));
    starts.push_back(def);
    for (int r = 0; r < opt.restarts; ++r) {
      GpHyper h;
      h.log_lengthscale.resize(d);
      for (Eigen::Index j = 0; j < d; ++j) h.log_lengthscale(j) = uniform(rng, std::log(0.05), std::log(2.0));
      h.log_signal_var = uniform(rng, std::log(0.3), std::log(3.0));
      h.log_noise_var = uniform(rng, std::log(1e-5), std::log(1e-2));
      starts.push_back(h);
    }
    double best = -std::numeric_limits<double>::infinity();
    GpHyper best_h = def;
    for (auto h : starts) {
      const double ll = gp.optimize(h, opt);
      if (ll > best) {
        best = ll;
        best_h = h;
      }
    }
    gp.hyper_ = best_h;
    gp.log_marginal_ = best;
    gp.factorize();
    return gp;
  }

  /// Fixed hyperparameters, no optimization.
  static GaussianProcess with_hyper(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, GpHyper h) {
    GaussianProcess gp;
    gp.X_ = X;
    gp.y_mean_ = y.mean();
    const double var = (y.array() - gp.y_mean_).square().sum() / std::max<double>(1.0, static_cast<double>(y.size() - 1));
    gp.y_scale_ = var > 1e-24 ? std::sqrt(var) : 1.0;
    gp.z_ = (y.array() - gp.y_mean_) / gp.y_scale_;
    gp.hyper_ = std::move(h);
    gp.factorize();
    return gp;
  }

  GpPrediction predict(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd q(1, x.size());
    q.row(0) = x.transpose();
    const auto p = predict_batch(q);
    return p.front();
  }

  /// Rows of Q are query points.
  std::vector<GpPrediction> predict_batch(const Eigen::MatrixXd& Q) const {
    const Eigen::MatrixXd Ks = cross_kernel(Q);  // n x m
    const Eigen::VectorXd mu = Ks.transpose() * alpha_;
    const Eigen::MatrixXd V = chol_.matrixL().solve(Ks);
    const double sv = std::exp(hyper_.log_signal_var);
    std::vector<GpPrediction> out(static_cast<std::size_t>(Q.rows()));
    for (Eigen::Index i = 0; i < Q.rows(); ++i) {
      const double var = std::max(sv - V.col(i).squaredNorm(), 0.0);
      out[static_cast<std::size_t>(i)] = {y_mean_ + y_scale_ * mu(i), y_scale_ * std::sqrt(var)};
    }
    return out;
  }

  const GpHyper& hyper() const { return hyper_; }
  double noise_std() const { return y_scale_ * std::exp(0.5 * hyper_.log_noise_var); }
  double signal_std() const { return y_scale_ * std::exp(0.5 * hyper_.log_signal_var); }
  double jitter() const { return jitter_; }
  double log_marginal_likelihood() const { return log_marginal_; }

 private:
  Eigen::MatrixXd kernel_matrix(const GpHyper& h) const {
    const auto n = X_.rows();
    const Eigen::ArrayXd inv_ls = (-h.log_lengthscale.array()).exp();
    const double sv = std::exp(h.log_signal_var);
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      K(i, i) = sv;
      for (Eigen::Index j = 0; j < i; ++j) {
        const double r = ((X_.row(i) - X_.row(j)).transpose().array() * inv_ls).matrix().norm();
        K(i, j) = K(j, i) = sv * matern52(r);
      }
    }
    return K;
  }

  Eigen::MatrixXd cross_kernel(const Eigen::MatrixXd& Q) const {
    const Eigen::ArrayXd inv_ls = (-hyper_.log_lengthscale.array()).exp();
    const double sv = std::exp(hyper_.log_signal_var);
    const Eigen::MatrixXd Xs = X_ * inv_ls.matrix().asDiagonal();
    const Eigen::MatrixXd Qs = Q * inv_ls.matrix().asDiagonal();
    const Eigen::VectorXd xn = Xs.rowwise().squaredNorm(), qn = Qs.rowwise().squaredNorm();
    Eigen::MatrixXd D = (-2.0 * Xs * Qs.transpose()).colwise() + xn;
    D.rowwise() += qn.transpose();
    return D.unaryExpr([sv](double d2) { return sv * matern52(std::sqrt(std::max(d2, 0.0))); });
  }

  /// Cholesky with a jitter ladder 1e-10 .. 1e-6 on top of the noise.
  bool cholesky(const Eigen::MatrixXd& K, double noise, Eigen::LLT<Eigen::MatrixXd>& llt,
                double& used_jitter) const {
    for (double jit : {0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6}) {
      Eigen::MatrixXd A = K;
      A.diagonal().array() += noise + jit;
      llt.compute(A);
      if (llt.info() == Eigen::Success) {
        used_jitter = jit;
        return true;
      }
    }
    return false;
  }

  void factorize() {
    const Eigen::MatrixXd K = kernel_matrix(hyper_);
    if (!cholesky(K, std::exp(hyper_.log_noise_var), chol_, jitter_))
      throw DomainError("GP covariance is singular even after jitter");
    alpha_ = chol_.solve(z_);
  }

  /// Log marginal likelihood and its gradient in log-hyperparameter space.
  double lml_and_grad(const GpHyper& h, GpHyper& g) const {
    const auto n = X_.rows(), d = X_.cols();
    const Eigen::MatrixXd K = kernel_matrix(h);
    Eigen::LLT<Eigen::MatrixXd> llt;
    double jit = 0.0;
    const double nv = std::exp(h.log_noise_var);
    if (!cholesky(K, nv, llt, jit)) return -std::numeric_limits<double>::infinity();
    const Eigen::VectorXd a = llt.solve(z_);
    const Eigen::MatrixXd Kinv = llt.solve(Eigen::MatrixXd::Identity(n, n));
    const Eigen::MatrixXd W = a * a.transpose() - Kinv;  // d lml / dK = W / 2
    double logdet = 0.0;
    const Eigen::MatrixXd L = llt.matrixL();
    for (Eigen::Index i = 0; i < n; ++i) logdet += 2.0 * std::log(L(i, i));
    const double lml = -0.5 * z_.dot(a) - 0.5 * logdet - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);

    const Eigen::ArrayXd inv_ls = (-h.log_lengthscale.array()).exp();
    const double sv = std::exp(h.log_signal_var);
    g.log_lengthscale = Eigen::VectorXd::Zero(d);
    // dK/dlog sv = K (off-noise part); dK/dlog nv = nv I.
    g.log_signal_var = 0.5 * (W.array() * K.array()).sum();
    g.log_noise_var = 0.5 * nv * W.trace();
    const double s5 = std::sqrt(5.0);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < i; ++j) {
        const Eigen::ArrayXd diff = (X_.row(i) - X_.row(j)).transpose().array() * inv_ls;
        const Eigen::ArrayXd d2 = diff.square();
        const double r = std::sqrt(d2.sum());
        // dk/dlog l_k = sv (5/3)(1 + sqrt5 r) exp(-sqrt5 r) (dx_k / l_k)^2
        const double common = sv * (5.0 / 3.0) * (1.0 + s5 * r) * std::exp(-s5 * r);
        g.log_lengthscale += (W(i, j) * common) * d2.matrix();  // symmetric pair counted once: 2 * 0.5
      }
    }
    return lml;
  }

  double optimize(GpHyper& h, const GpFitOptions& opt) const {
    const auto d = X_.cols();
    auto clamp_h = [&](GpHyper& p) {
      for (Eigen::Index j = 0; j < d; ++j)
        p.log_lengthscale(j) = std::clamp(p.log_lengthscale(j), opt.min_log_ls, opt.max_log_ls);
      p.log_signal_var = std::clamp(p.log_signal_var, opt.min_log_sv, opt.max_log_sv);
      p.log_noise_var = std::clamp(p.log_noise_var, opt.min_log_nv, opt.max_log_nv);
    };
    clamp_h(h);
    const auto P = d + 2;
    Eigen::VectorXd m = Eigen::VectorXd::Zero(P), v = Eigen::VectorXd::Zero(P);
    GpHyper best = h;
    GpHyper g;
    double best_ll = lml_and_grad(h, g);
    for (int step = 1; step <= opt.steps; ++step) {
      if (step > 1 && !std::isfinite(lml_and_grad(h, g))) break;
      Eigen::VectorXd grad(P);
      grad.head(d) = g.log_lengthscale;
      grad(d) = g.log_signal_var;
      grad(d + 1) = g.log_noise_var;
      m = 0.9 * m + 0.1 * grad;
      v = 0.999 * v + 0.001 * grad.cwiseProduct(grad);
      const Eigen::VectorXd mh = m / (1.0 - std::pow(0.9, step));
      const Eigen::VectorXd vh = v / (1.0 - std::pow(0.999, step));
      const Eigen::VectorXd delta = opt.lr * mh.array() / (vh.array().sqrt() + 1e-8);
      h.log_lengthscale += delta.head(d);
      h.log_signal_var += delta(d);
      h.log_noise_var += delta(d + 1);
      clamp_h(h);
      GpHyper scratch;
      const double ll = lml_and_grad(h, scratch);
      if (ll > best_ll) {
        best_ll = ll;
        best = h;
      }
      g = scratch;
    }
    h = best;
    return best_ll;
  }

  Eigen::MatrixXd X_;
  Eigen::VectorXd z_;
  double y_mean_ = 0.0;
  double y_scale_ = 1.0;
  GpHyper hyper_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::VectorXd alpha_;
  double jitter_ = 0.0;
  double log_marginal_ = 0.0;
};

inline double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
inline double standard_normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

/// EI for minimization: (best - mean) Phi(z) + std phi(z), z = (best - mean)/std.
inline double expected_improvement(double mean, double std, double best) {
  if (std < 0.0 || !std::isfinite(std)) throw ValidationError("EI needs a finite std >= 0");
  const double imp = best - mean;
  if (std == 0.0) return std::max(imp, 0.0);
  const double z = imp / std;
  return std::max(imp * standard_normal_cdf(z) + std * standard_normal_pdf(z), 0.0);
}

}  // namespace crossim
