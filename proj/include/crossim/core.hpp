#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace crossim {

using Rng = std::mt19937_64;

/// Raised when an input violates a documented precondition (non-finite
/// values, malformed files, bad config).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a formula is evaluated outside its mathematical domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when callers break an interface contract (wrong observation
/// width, missing belief for a visual variant, ...).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class Variant { NC, MC, VC, VMC };
enum class AgentKind { Pedestrian, Vehicle };

constexpr bool has_visual(Variant v) { return v == Variant::VC || v == Variant::VMC; }
constexpr bool has_motor(Variant v) { return v == Variant::MC || v == Variant::VMC; }

inline std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::NC: return "NC";
    case Variant::MC: return "MC";
    case Variant::VC: return "VC";
    case Variant::VMC: return "VMC";
  }
  return "?";
}

inline Variant parse_variant(std::string_view s) {
  if (s == "NC") return Variant::NC;
  if (s == "MC") return Variant::MC;
  if (s == "VC") return Variant::VC;
  if (s == "VMC") return Variant::VMC;
  throw ValidationError("unknown variant '" + std::string(s) + "' (expected NC|MC|VC|VMC)");
}

inline std::string_view to_string(AgentKind k) {
  return k == AgentKind::Pedestrian ? "pedestrian" : "vehicle";
}

inline void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw ValidationError(std::string("non-finite ") + what);
}

/// Wrap an angle into (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a + std::numbers::pi, two_pi);
  if (a < 0) a += two_pi;
  return a - std::numbers::pi;
}

constexpr double deg_to_rad(double d) { return d * std::numbers::pi / 180.0; }
constexpr double rad_to_deg(double r) { return r * 180.0 / std::numbers::pi; }

/// splitmix64 finalizer; used to derive independent rng streams from one seed.
constexpr std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline double normal(Rng& rng, double mean = 0.0, double stddev = 1.0) {
  if (stddev == 0.0) return mean;
  std::normal_distribution<double> d(mean, stddev);
  return d(rng);
}

inline double uniform(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  return d(rng);
}

}  // namespace crossim
