#pragma once

// Non-policy parameters: population distributions, two-stage sampling and the
// 8-element fitting vector.

#include <algorithm>
#include <array>
#include <string_view>

#include "crossim/core.hpp"

namespace crossim {

struct NonPolicyParams {
  double nu_ped = 0.0;  // rad
  double nu_veh = 0.0;  // rad
  double w_ped = 0.0;
  double w_veh = 1.0;
};

struct NormalSpec {
  double mu = 0.0;
  double sigma = 0.0;
};

struct PopulationSpec {
  NormalSpec nu_ped;
  NormalSpec nu_veh;
  NormalSpec w_ped;
  NormalSpec w_veh;
};

struct Range {
  double lo;
  double hi;
  double clamp(double v) const { return std::clamp(v, lo, hi); }
  double width() const { return hi - lo; }
};

/// Ranges that the population means and standard deviations are drawn from
/// during training; the same box constrains fitting.
struct ParamRanges {
  static constexpr Range nu_mu{0.01, 0.1};
  static constexpr Range nu_sigma{0.001, 0.01};
  static constexpr Range w_ped_mu{0.05, 0.5};
  static constexpr Range w_ped_sigma{0.005, 0.05};
  static constexpr Range w_veh_mu{1.0, 10.0};
  static constexpr Range w_veh_sigma{0.1, 1.0};
};

/// [mu_nu_ped, sigma_nu_ped, mu_nu_veh, sigma_nu_veh,
///  mu_w_ped, sigma_w_ped, mu_w_veh, sigma_w_veh]
using PhiVector = std::array<double, 8>;

inline constexpr std::array<Range, 8> kPhiBounds = {
    ParamRanges::nu_mu,    ParamRanges::nu_sigma,    ParamRanges::nu_mu,
    ParamRanges::nu_sigma, ParamRanges::w_ped_mu,    ParamRanges::w_ped_sigma,
    ParamRanges::w_veh_mu, ParamRanges::w_veh_sigma};

inline constexpr std::array<std::string_view, 8> kPhiNames = {
    "mu_nu_ped", "sigma_nu_ped", "mu_nu_veh", "sigma_nu_veh",
    "mu_w_ped",  "sigma_w_ped",  "mu_w_veh",  "sigma_w_veh"};

inline PopulationSpec sample_population_spec(Rng& rng) {
  using R = ParamRanges;
  PopulationSpec p;
  p.nu_ped = {uniform(rng, R::nu_mu.lo, R::nu_mu.hi), uniform(rng, R::nu_sigma.lo, R::nu_sigma.hi)};
  p.nu_veh = {uniform(rng, R::nu_mu.lo, R::nu_mu.hi), uniform(rng, R::nu_sigma.lo, R::nu_sigma.hi)};
  p.w_ped = {uniform(rng, R::w_ped_mu.lo, R::w_ped_mu.hi),
             uniform(rng, R::w_ped_sigma.lo, R::w_ped_sigma.hi)};
  p.w_veh = {uniform(rng, R::w_veh_mu.lo, R::w_veh_mu.hi),
             uniform(rng, R::w_veh_sigma.lo, R::w_veh_sigma.hi)};
  return p;
}

namespace detail {

/// Normal truncated below at zero by rejection, clamped after 100 misses.
inline double sample_nonnegative(const NormalSpec& s, Rng& rng) {
  if (s.sigma <= 0.0) return std::max(s.mu, 0.0);
  for (int i = 0; i < 100; ++i) {
    const double v = normal(rng, s.mu, s.sigma);
    if (v >= 0.0) return v;
  }
  return 0.0;
}

}  // namespace detail

inline NonPolicyParams sample_agent_params(const PopulationSpec& spec, Rng& rng) {
  NonPolicyParams p;
  p.nu_ped = detail::sample_nonnegative(spec.nu_ped, rng);
  p.nu_veh = detail::sample_nonnegative(spec.nu_veh, rng);
  p.w_ped = detail::sample_nonnegative(spec.w_ped, rng);
  p.w_veh = std::max(1.0, detail::sample_nonnegative(spec.w_veh, rng));
  return p;
}

inline PhiVector clamp_phi(PhiVector phi) {
  for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = kPhiBounds[i].clamp(phi[i]);
  return phi;
}

inline PopulationSpec to_population_spec(const PhiVector& phi) {
  return {{phi[0], phi[1]}, {phi[2], phi[3]}, {phi[4], phi[5]}, {phi[6], phi[7]}};
}

inline PhiVector to_phi(const PopulationSpec& p) {
  return {p.nu_ped.mu, p.nu_ped.sigma, p.nu_veh.mu, p.nu_veh.sigma,
          p.w_ped.mu,  p.w_ped.sigma,  p.w_veh.mu,  p.w_veh.sigma};
}

/// Map phi to the unit box and back.
inline PhiVector phi_to_unit(const PhiVector& phi) {
  PhiVector u{};
  for (std::size_t i = 0; i < phi.size(); ++i)
    u[i] = (phi[i] - kPhiBounds[i].lo) / kPhiBounds[i].width();
  return u;
}

inline PhiVector phi_from_unit(const PhiVector& u) {
  PhiVector phi{};
  for (std::size_t i = 0; i < u.size(); ++i)
    phi[i] = kPhiBounds[i].lo + std::clamp(u[i], 0.0, 1.0) * kPhiBounds[i].width();
  return phi;
}

inline PhiVector phi_midpoint() { return phi_from_unit({0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5}); }

}  // namespace crossim
