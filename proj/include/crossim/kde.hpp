#pragma once

// Gaussian kernel density estimators with Scott's-rule bandwidths.
//
// GaussianKde1D scores per-metric samples; ProductKde is the joint
// initial-condition model (diagonal bandwidth, one kernel per sample).

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "crossim/core.hpp"

namespace crossim {

namespace detail {

inline double sample_mean(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

/// Unbiased (n-1) standard deviation; 0 for fewer than two samples.
inline double sample_std(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = sample_mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

inline double log_sum_exp(std::span<const double> v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : v) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2 pi))

}  // namespace detail

/// Scott's rule: sigma * n^(-1/(d+4)).
inline double scott_bandwidth(double stddev, std::size_t n, std::size_t dims = 1) {
  return stddev * std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(dims) + 4.0));
}

class GaussianKde1D {
 public:
  static constexpr double kDefaultLogFloor = -20.0;
  static constexpr double kDefaultBandwidthFloor = 1e-3;

  GaussianKde1D() = default;

  static GaussianKde1D fit(std::span<const double> samples, double log_floor = kDefaultLogFloor,
                           double bandwidth_floor = kDefaultBandwidthFloor) {
    if (samples.empty()) throw ValidationError("KDE fit on empty sample set");
    for (double s : samples) require_finite(s, "KDE sample");
    GaussianKde1D k;
    k.samples_.assign(samples.begin(), samples.end());
    std::sort(k.samples_.begin(), k.samples_.end());
    k.bandwidth_ =
        std::max(scott_bandwidth(detail::sample_std(samples), samples.size()), bandwidth_floor);
    k.log_floor_ = log_floor;
    return k;
  }

  double log_density(double x) const {
    if (!std::isfinite(x)) return log_floor_;
    const double h = bandwidth_;
    // Kernels further than ~40 h contribute < e^-800 and are skipped.
    const double reach = 40.0 * h;
    auto lo = std::lower_bound(samples_.begin(), samples_.end(), x - reach);
    auto hi = std::upper_bound(samples_.begin(), samples_.end(), x + reach);
    if (lo == hi) return log_floor_;
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(hi - lo));
    for (auto it = lo; it != hi; ++it) {
      const double z = (x - *it) / h;
      terms.push_back(-0.5 * z * z);
    }
    const double lse = detail::log_sum_exp(terms);
    const double ld = lse - std::log(static_cast<double>(samples_.size())) - std::log(h) -
                      detail::kLogSqrt2Pi;
    return std::max(ld, log_floor_);
  }

  double bandwidth() const { return bandwidth_; }
  double log_floor() const { return log_floor_; }
  const std::vector<double>& samples() const { return samples_; }

 private:
  std::vector<double> samples_;
  double bandwidth_ = 1.0;
  double log_floor_ = kDefaultLogFloor;
};

/// Joint KDE with a product of per-dimension Gaussian kernels.
class ProductKde {
 public:
  ProductKde() = default;

  static ProductKde fit(std::vector<std::vector<double>> points, double bandwidth_floor = 1e-3) {
    if (points.size() < 2) throw ValidationError("joint KDE needs at least 2 samples");
    const std::size_t d = points.front().size();
    if (d == 0) throw ValidationError("joint KDE needs at least one dimension");
    for (const auto& p : points) {
      if (p.size() != d) throw ValidationError("joint KDE samples have inconsistent dimension");
      for (double v : p) require_finite(v, "KDE sample");
    }
    ProductKde k;
    k.bandwidths_.resize(d);
    std::vector<double> col(points.size());
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t i = 0; i < points.size(); ++i) col[i] = points[i][j];
      k.bandwidths_[j] =
          std::max(scott_bandwidth(detail::sample_std(col), points.size(), d), bandwidth_floor);
    }
    k.points_ = std::move(points);
    return k;
  }

  std::size_t dims() const { return bandwidths_.size(); }
  std::size_t size() const { return points_.size(); }
  const std::vector<double>& bandwidths() const { return bandwidths_; }
  const std::vector<std::vector<double>>& points() const { return points_; }

  double log_density(std::span<const double> x) const {
    if (x.size() != dims()) throw ContractError("KDE query has wrong dimension");
    double log_norm = 0.0;
    for (double h : bandwidths_) log_norm += std::log(h) + detail::kLogSqrt2Pi;
    std::vector<double> terms(points_.size());
    for (std::size_t i = 0; i < points_.size(); ++i) {
      double q = 0.0;
      for (std::size_t j = 0; j < dims(); ++j) {
        const double z = (x[j] - points_[i][j]) / bandwidths_[j];
        q += z * z;
      }
      terms[i] = -0.5 * q;
    }
    return detail::log_sum_exp(terms) - std::log(static_cast<double>(points_.size())) - log_norm;
  }

  std::vector<double> sample(Rng& rng) const {
    std::uniform_int_distribution<std::size_t> pick(0, points_.size() - 1);
    const auto& c = points_[pick(rng)];
    std::vector<double> out(dims());
    for (std::size_t j = 0; j < dims(); ++j) out[j] = normal(rng, c[j], bandwidths_[j]);
    return out;
  }

 private:
  std::vector<std::vector<double>> points_;
  std::vector<double> bandwidths_;
};

}  // namespace crossim
