#pragma once

// Trajectory ingestion and interaction-pair extraction.
//
// Direction labels follow the survey site's compass naming: pedestrians
// labelled "East" cross from the near kerb (+y), "West" ones come from the
// refuge island; in-scope vehicles are labelled "North" and travel along +x
// in this frame.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "crossim/kde.hpp"
#include "crossim/world.hpp"

namespace crossim {

inline constexpr const char* kPedInScope = "East";
inline constexpr const char* kPedFromRefuge = "West";
inline constexpr const char* kVehInScope = "North";

struct TrackSample {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
};

struct RawTrack {
  std::string id;
  AgentKind kind = AgentKind::Pedestrian;
  std::string direction;
  std::vector<TrackSample> samples;

  void validate() const {
    if (samples.empty()) throw ValidationError("track '" + id + "' has no samples");
    for (std::size_t i = 0; i < samples.size(); ++i) {
      require_finite(samples[i].t, "track timestamp");
      require_finite(samples[i].x, "track x");
      require_finite(samples[i].y, "track y");
      if (i > 0 && !(samples[i].t > samples[i - 1].t))
        throw ValidationError("track '" + id + "' timestamps are not strictly increasing");
    }
  }
};

/// One aligned time step of a pair, with derived kinematics.
struct PairSample {
  double t = 0.0;
  double ped_x = 0.0, ped_y = 0.0, ped_speed = 0.0, ped_heading = 0.0;
  double veh_x = 0.0, veh_y = 0.0, veh_speed = 0.0, veh_accel = 0.0;

  bool operator==(const PairSample&) const = default;
};

struct InteractionPair {
  std::string id;
  std::string ped_id;
  std::string veh_id;
  double t_start = 0.0;
  std::vector<PairSample> samples;

  bool operator==(const InteractionPair&) const = default;
};

struct TrajectorySegment {
  std::string pair_id;
  int index = 0;
  std::vector<PairSample> samples;
  WorldState initial;
};

struct PipelineConfig {
  double dt = 0.1;
  double window = 6.0;        // s extracted per pair
  double segment_length = 2.0;
};

/// State at an aligned sample; t is measured from the start of the pair.
inline WorldState to_world_state(const PairSample& p, double t0 = 0.0) {
  WorldState s;
  s.t = p.t - t0;
  s.ped_x = p.ped_x;
  s.ped_y = p.ped_y;
  s.ped_speed = p.ped_speed;
  s.ped_heading = p.ped_heading;
  s.veh_x = p.veh_x;
  s.veh_y = p.veh_y;
  s.veh_speed = p.veh_speed;
  s.veh_accel = p.veh_accel;
  return s;
}

// ---------------------------------------------------------------- CSV

inline AgentKind parse_agent_kind(const std::string& s) {
  if (s == "pedestrian" || s == "ped") return AgentKind::Pedestrian;
  if (s == "vehicle" || s == "veh") return AgentKind::Vehicle;
  throw ValidationError("unknown agent kind '" + s + "'");
}

/// Reads `track_id,kind,direction,t,x,y` rows; rows of a track may be
/// interleaved with others but must be time-ordered within the track.
inline std::vector<RawTrack> read_tracks_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("track CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "track_id,kind,direction,t,x,y")
    throw ValidationError("track CSV header must be 'track_id,kind,direction,t,x,y'");
  std::vector<RawTrack> tracks;
  std::map<std::string, std::size_t> index;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 6) throw ValidationError("track CSV line " + std::to_string(lineno) + ": expected 6 fields");
    TrackSample s;
    try {
      s.t = std::stod(f[3]);
      s.x = std::stod(f[4]);
      s.y = std::stod(f[5]);
    } catch (const std::exception&) {
      throw ValidationError("track CSV line " + std::to_string(lineno) + ": bad number");
    }
    auto [it, fresh] = index.try_emplace(f[0], tracks.size());
    if (fresh) tracks.push_back({f[0], parse_agent_kind(f[1]), f[2], {}});
    auto& tr = tracks[it->second];
    if (tr.kind != parse_agent_kind(f[1]) || tr.direction != f[2])
      throw ValidationError("track '" + f[0] + "' changes kind or direction");
    tr.samples.push_back(s);
  }
  for (const auto& t : tracks) t.validate();
  return tracks;
}

inline std::vector<RawTrack> read_tracks_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open track file '" + path + "'");
  return read_tracks_csv(in);
}

inline void write_tracks_csv(std::ostream& out, const std::vector<RawTrack>& tracks) {
  out << "track_id,kind,direction,t,x,y\n";
  out.precision(10);
  for (const auto& tr : tracks)
    for (const auto& s : tr.samples)
      out << tr.id << ',' << to_string(tr.kind) << ',' << tr.direction << ',' << s.t << ',' << s.x
          << ',' << s.y << '\n';
}

// ---------------------------------------------------------------- resampling

/// Linear interpolation onto the absolute grid k * dt inside the track's span,
/// so that tracks sharing a clock land on common instants.
inline RawTrack resample(const RawTrack& tr, double dt) {
  tr.validate();
  if (!(dt > 0.0)) throw ValidationError("resample dt must be positive");
  RawTrack out{tr.id, tr.kind, tr.direction, {}};
  const auto& s = tr.samples;
  const double eps = 1e-9;
  const auto k0 = static_cast<long long>(std::ceil(s.front().t / dt - eps));
  const auto k1 = static_cast<long long>(std::floor(s.back().t / dt + eps));
  std::size_t j = 0;
  for (long long k = k0; k <= k1; ++k) {
    const double t = static_cast<double>(k) * dt;
    while (j + 1 < s.size() && s[j + 1].t < t) ++j;
    TrackSample r{t, s[j].x, s[j].y};
    if (j + 1 < s.size()) {
      const double w = std::clamp((t - s[j].t) / (s[j + 1].t - s[j].t), 0.0, 1.0);
      r.x = s[j].x + w * (s[j + 1].x - s[j].x);
      r.y = s[j].y + w * (s[j + 1].y - s[j].y);
    }
    out.samples.push_back(r);
  }
  return out;
}

/// Central-difference speed (one-sided at the ends) at each sample.
inline std::vector<double> derived_speeds(const std::vector<TrackSample>& s) {
  const std::size_t n = s.size();
  std::vector<double> v(n, 0.0);
  if (n < 2) return v;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = i == 0 ? 0 : i - 1;
    const std::size_t b = i + 1 == n ? n - 1 : i + 1;
    v[i] = std::hypot(s[b].x - s[a].x, s[b].y - s[a].y) / (s[b].t - s[a].t);
  }
  return v;
}

/// Heading of the displacement (0 along +y, clockwise toward +x), smoothed by
/// a 3-sample circular mean.
inline std::vector<double> derived_headings(const std::vector<TrackSample>& s) {
  const std::size_t n = s.size();
  std::vector<double> raw(n, 0.0), out(n, 0.0);
  if (n < 2) return out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = i == 0 ? 0 : i - 1;
    const std::size_t b = i + 1 == n ? n - 1 : i + 1;
    raw[i] = std::atan2(s[b].x - s[a].x, s[b].y - s[a].y);
  }
  for (std::size_t i = 0; i < n; ++i) {
    double sx = 0.0, cy = 0.0;
    for (std::size_t j = (i == 0 ? 0 : i - 1); j <= std::min(n - 1, i + 1); ++j) {
      sx += std::sin(raw[j]);
      cy += std::cos(raw[j]);
    }
    out[i] = std::atan2(sx, cy);
  }
  return out;
}

// ---------------------------------------------------------------- extraction

namespace detail {

struct Interval {
  double begin = 0.0;
  double end = 0.0;
};

template <class Pred>
std::optional<Interval> presence(const RawTrack& tr, Pred in_zone) {
  std::optional<Interval> iv;
  for (const auto& s : tr.samples) {
    if (!in_zone(s)) continue;
    if (!iv) iv = Interval{s.t, s.t};
    iv->end = s.t;
  }
  return iv;
}

inline bool overlaps(const Interval& a, const Interval& b) {
  return std::max(a.begin, b.begin) <= std::min(a.end, b.end);
}

inline bool ped_in_zone(const TrackSample& s, const SceneGeometry& g, double half_x) {
  return std::abs(s.x - g.crossing_x) <= half_x && std::abs(s.y - g.kerb_y) <= g.ped_zone_kerb_depth;
}

inline bool veh_upstream(const TrackSample& s, const SceneGeometry& g) {
  const double before = g.crossing_x - s.x;
  return before >= 0.0 && before <= g.veh_zone_upstream;
}

inline bool veh_in_zone(const TrackSample& s, const SceneGeometry& g) {
  const double rel = s.x - g.crossing_x;
  return rel >= -g.veh_zone_upstream && rel <= g.veh_zone_downstream;
}

inline bool in_refuge(const TrackSample& s, const SceneGeometry& g) {
  const double far_edge = g.crossing_y + g.lane_half_width;
  return std::abs(s.x - g.crossing_x) <= g.crossing_half_width_x && s.y >= far_edge &&
         s.y <= far_edge + g.refuge_depth;
}

inline double grid_time(long long k, double dt) { return static_cast<double>(k) * dt; }

}  // namespace detail

/// Pair extraction: direction filtering and refuge-island exclusion, proximity
/// gating, temporal overlap, one-to-one matching both ways, pedestrian
/// truncation, alignment and fixed-length extraction. Output is sorted by pair
/// id so the result does not depend on input order.
inline std::vector<InteractionPair> extract_pairs(const std::vector<RawTrack>& input,
                                                  const SceneGeometry& g = {},
                                                  const PipelineConfig& pc = {}) {
  g.validate();
  std::vector<RawTrack> peds, vehs, refuge_peds;
  for (const auto& tr : input) {
    auto r = resample(tr, pc.dt);
    if (r.samples.empty()) continue;
    if (r.kind == AgentKind::Pedestrian) {
      if (r.direction == kPedInScope) peds.push_back(std::move(r));
      else if (r.direction == kPedFromRefuge) refuge_peds.push_back(std::move(r));
    } else if (r.direction == kVehInScope) {
      vehs.push_back(std::move(r));
    }
  }
  auto by_id = [](const RawTrack& a, const RawTrack& b) { return a.id < b.id; };
  std::sort(peds.begin(), peds.end(), by_id);
  std::sort(vehs.begin(), vehs.end(), by_id);

  // Vehicles overlapping a refuge-island pedestrian while upstream are dropped.
  std::vector<detail::Interval> refuge_times;
  for (const auto& p : refuge_peds)
    if (auto iv = detail::presence(p, [&](const TrackSample& s) { return detail::in_refuge(s, g); }))
      refuge_times.push_back(*iv);

  struct VehInfo {
    const RawTrack* track;
    detail::Interval zone;
  };
  std::vector<VehInfo> veh_info;
  for (const auto& v : vehs) {
    const auto up = detail::presence(v, [&](const TrackSample& s) { return detail::veh_upstream(s, g); });
    if (!up) continue;
    const bool disturbed = std::any_of(refuge_times.begin(), refuge_times.end(),
                                       [&](const detail::Interval& r) { return detail::overlaps(*up, r); });
    if (disturbed) continue;
    const auto zone = detail::presence(v, [&](const TrackSample& s) { return detail::veh_in_zone(s, g); });
    veh_info.push_back({&v, *zone});
  }

  // Candidate matching.
  std::vector<std::vector<std::size_t>> cand(peds.size());
  std::map<std::size_t, int> veh_count;
  for (std::size_t i = 0; i < peds.size(); ++i) {
    const auto pz = detail::presence(
        peds[i], [&](const TrackSample& s) { return detail::ped_in_zone(s, g, g.ped_zone_half_x); });
    if (!pz) continue;
    for (std::size_t j = 0; j < veh_info.size(); ++j) {
      if (detail::overlaps(*pz, veh_info[j].zone)) {
        cand[i].push_back(j);
        ++veh_count[j];
      }
    }
  }

  const auto n_window = static_cast<std::size_t>(std::llround(pc.window / pc.dt));
  std::vector<InteractionPair> pairs;
  for (std::size_t i = 0; i < peds.size(); ++i) {
    if (cand[i].size() != 1) continue;
    const std::size_t j = cand[i][0];
    if (veh_count[j] != 1) continue;
    const RawTrack& ped = peds[i];
    const RawTrack& veh = *veh_info[j].track;

    const auto pt = detail::presence(
        ped, [&](const TrackSample& s) { return detail::ped_in_zone(s, g, g.ped_truncate_half_x); });
    if (!pt) continue;
    const double t0 = std::max(pt->begin, veh_info[j].zone.begin);
    const double t1 = std::min(pt->end, veh_info[j].zone.end);
    if (t1 - t0 < pc.window - 1e-9) continue;

    const auto pv = derived_speeds(ped.samples);
    const auto ph = derived_headings(ped.samples);
    const auto vv = derived_speeds(veh.samples);
    const auto k0 = static_cast<long long>(std::llround(t0 / pc.dt));
    auto index_of = [&](const RawTrack& tr, long long k) {
      const auto first = static_cast<long long>(std::llround(tr.samples.front().t / pc.dt));
      return static_cast<std::size_t>(k - first);
    };
    InteractionPair pair;
    pair.ped_id = ped.id;
    pair.veh_id = veh.id;
    pair.id = ped.id + "|" + veh.id;
    pair.t_start = detail::grid_time(k0, pc.dt);
    for (std::size_t n = 0; n < n_window; ++n) {
      const long long k = k0 + static_cast<long long>(n);
      const std::size_t a = index_of(ped, k), b = index_of(veh, k);
      PairSample s;
      s.t = detail::grid_time(k, pc.dt);
      s.ped_x = ped.samples[a].x;
      s.ped_y = ped.samples[a].y;
      s.ped_speed = pv[a];
      s.ped_heading = ph[a];
      s.veh_x = veh.samples[b].x;
      s.veh_y = veh.samples[b].y;
      s.veh_speed = vv[b];
      const std::size_t b0 = b == 0 ? 0 : b - 1, b1 = b + 1 < vv.size() ? b + 1 : b;
      s.veh_accel = b1 > b0 ? (vv[b1] - vv[b0]) / (veh.samples[b1].t - veh.samples[b0].t) : 0.0;
      pair.samples.push_back(s);
    }
    pairs.push_back(std::move(pair));
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const InteractionPair& a, const InteractionPair& b) { return a.id < b.id; });
  return pairs;
}

/// Three contiguous slices per pair with the initial state of each.
inline std::vector<TrajectorySegment> segment_pairs(const std::vector<InteractionPair>& pairs,
                                                    const PipelineConfig& pc = {}) {
  const auto len = static_cast<std::size_t>(std::llround(pc.segment_length / pc.dt));
  const auto count = static_cast<std::size_t>(std::llround(pc.window / pc.segment_length));
  std::vector<TrajectorySegment> out;
  for (const auto& p : pairs) {
    if (p.samples.size() != len * count)
      throw ValidationError("pair '" + p.id + "' does not span the full extraction window");
    for (std::size_t k = 0; k < count; ++k) {
      TrajectorySegment s;
      s.pair_id = p.id;
      s.index = static_cast<int>(k);
      s.samples.assign(p.samples.begin() + static_cast<std::ptrdiff_t>(k * len),
                       p.samples.begin() + static_cast<std::ptrdiff_t>((k + 1) * len));
      s.initial = to_world_state(s.samples.front(), p.t_start);
      out.push_back(std::move(s));
    }
  }
  return out;
}

inline std::vector<WorldState> segment_states(const TrajectorySegment& seg) {
  std::vector<WorldState> out;
  const double offset = seg.samples.front().t - seg.initial.t;
  for (const auto& s : seg.samples) out.push_back(to_world_state(s, offset));
  return out;
}

/// KDE over (ped_x, ped_y, ped_speed, veh_x, veh_speed) at the start of every
/// segment.
inline InitialConditionModel fit_initial_kde(const std::vector<InteractionPair>& pairs,
                                             const PipelineConfig& pc = {}) {
  if (pairs.size() < 2) throw ValidationError("initial-condition KDE needs at least 2 pairs");
  std::vector<std::vector<double>> pts;
  for (const auto& seg : segment_pairs(pairs, pc)) {
    const auto& s = seg.initial;
    pts.push_back({s.ped_x, s.ped_y, s.ped_speed, s.veh_x, s.veh_speed});
  }
  return ProductKde::fit(pts);
}

// ---------------------------------------------------------------- synthetic corpus

enum class Scenario { VehicleFirst, PedFirstYield, PedFirstNoYield };

inline std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::VehicleFirst: return "vehicle_first";
    case Scenario::PedFirstYield: return "ped_first_yield";
    case Scenario::PedFirstNoYield: return "ped_first_no_yield";
  }
  return "?";
}

struct ScenarioMix {
  double vehicle_first = 1.0 / 3.0;
  double ped_first_yield = 1.0 / 3.0;
  double ped_first_no_yield = 1.0 / 3.0;

  void validate() const {
    for (double p : {vehicle_first, ped_first_yield, ped_first_no_yield}) {
      require_finite(p, "scenario proportion");
      if (p < 0.0) throw ValidationError("scenario proportions must be non-negative");
    }
    if (std::abs(vehicle_first + ped_first_yield + ped_first_no_yield - 1.0) > 1e-6)
      throw ValidationError("scenario proportions must sum to 1");
  }
};

struct SyntheticCorpus {
  std::vector<RawTrack> tracks;
  std::map<std::string, Scenario> labels;  // keyed by pedestrian track id
};

namespace detail {

/// Scripted two-agent kinematics at a fine internal step. Speed targets move
/// at bounded acceleration so that tracks are smooth.
struct ScriptedPair {
  std::vector<TrackSample> ped, veh;
  bool collided = false;
  double veh_cross_time = -1.0;  // vehicle front reaches the pedestrian's x
  double ped_cross_time = -1.0;  // pedestrian reaches the lane centre
};

inline double approach(double v, double target, double accel, double h) {
  return v < target ? std::min(target, v + accel * h) : std::max(target, v - accel * h);
}

inline ScriptedPair script_pair(Scenario sc, Rng& rng, const SceneGeometry& g, double t_offset) {
  const double h = 0.01, emit = 0.05, duration = 14.0;
  const double ped_decel = 1.2;
  const double front = 0.5 * g.veh_length;
  const double lane = g.veh_lane_y;
  const double stop_line = g.kerb_y - 0.4;  // where a waiting pedestrian stands

  double px = uniform(rng, -1.5, 1.5);
  double py = sc == Scenario::PedFirstNoYield ? g.kerb_y - uniform(rng, 2.0, 3.0)
                                             : g.kerb_y - uniform(rng, 5.3, 5.9);
  const double drift = uniform(rng, -0.03, 0.03);  // slight lateral walking angle
  const double vp_walk = uniform(rng, 1.1, 1.4);
  const double vp_cross = sc == Scenario::PedFirstNoYield ? uniform(rng, 1.3, 1.5) : vp_walk;
  double vp = sc == Scenario::PedFirstNoYield ? 0.0 : vp_walk;

  double vx = g.crossing_x - g.veh_zone_upstream, vv = 0.0;
  double release_at = -1.0;  // no-yield: the pedestrian leaves the kerb at this time
  const double stop_x = g.crossing_x - uniform(rng, 5.0, 7.0) - front;
  switch (sc) {
    case Scenario::VehicleFirst:
      vv = uniform(rng, 5.5, 7.5);
      vx -= uniform(rng, 0.0, 2.0);
      break;
    case Scenario::PedFirstYield:
      vv = uniform(rng, 5.0, 7.0);
      vx -= uniform(rng, 2.0, 6.0);
      break;
    case Scenario::PedFirstNoYield:
      vv = uniform(rng, 3.4, 4.0);
      vx -= uniform(rng, 0.0, 1.0);
      release_at = uniform(rng, 2.0, 2.8);
      break;
  }
  const double vv_cruise = vv;

  ScriptedPair out;
  double next_emit = 0.0;
  double clear_seen = -1.0;
  for (double t = 0.0; t <= duration + 1e-9; t += h) {
    if (t + 1e-9 >= next_emit) {
      out.ped.push_back({t + t_offset, px, py});
      out.veh.push_back({t + t_offset, vx, lane});
      next_emit += emit;
    }
    // Pedestrian: hold at the stop line while required, otherwise walk.
    bool hold = false;
    if (sc == Scenario::VehicleFirst) {
      if (clear_seen < 0.0 && vx - front > px + 1.5) clear_seen = t;
      hold = clear_seen < 0.0 || t < clear_seen + 0.4;
    } else if (sc == Scenario::PedFirstNoYield) {
      hold = t < release_at;
    }
    double vp_target = release_at >= 0.0 && t >= release_at ? vp_cross : vp_walk;
    if (hold && py < stop_line + 0.05) {
      const double stopping = vp * vp / (2.0 * ped_decel);
      if (py + stopping >= stop_line) vp_target = 0.0;
    }
    if (hold && py >= stop_line) vp_target = 0.0;
    vp = approach(vp, vp_target, ped_decel, h);
    px += vp * std::sin(drift) * h;
    py += vp * std::cos(drift) * h;

    // Vehicle: cruise, or brake to a stop before the crossing until the
    // pedestrian is clear of the lane.
    double vv_target = vv_cruise;
    if (sc == Scenario::PedFirstYield) {
      const bool ped_clear = py > lane + 0.5 * g.veh_width + 1.0;
      if (!ped_clear) {
        const double gap = stop_x - vx;
        if (gap <= 0.05 || vv * vv / (2.0 * gap) > 1.2) vv_target = 0.0;
      }
    }
    vv = approach(vv, vv_target, sc == Scenario::PedFirstYield ? 3.0 : 1.0, h);
    vx += vv * h;

    if (out.ped_cross_time < 0.0 && py >= g.crossing_y) out.ped_cross_time = t;
    if (out.veh_cross_time < 0.0 && vx + front >= px) out.veh_cross_time = t;
    const double dx = std::max(std::abs(px - vx) - front, 0.0);
    const double dy = std::max(std::abs(py - lane) - 0.5 * g.veh_width, 0.0);
    if (dx * dx + dy * dy <= g.ped_radius * g.ped_radius) out.collided = true;
  }
  return out;
}

}  // namespace detail

/// Scripted, collision-free pairs laid out in disjoint time slots. Every pair
/// is checked against the extraction pipeline before it is accepted.
inline SyntheticCorpus generate_synthetic_corpus(int n_pairs, const ScenarioMix& mix, Rng& rng,
                                                 const SceneGeometry& g = {},
                                                 const PipelineConfig& pc = {}) {
  mix.validate();
  if (n_pairs < 0) throw ValidationError("n_pairs must be >= 0");
  SyntheticCorpus corpus;
  // Largest-remainder apportionment of the scenario counts, then shuffled.
  const double props[3] = {mix.vehicle_first, mix.ped_first_yield, mix.ped_first_no_yield};
  int counts[3];
  double rem[3];
  int assigned = 0;
  for (int k = 0; k < 3; ++k) {
    const double exact = props[k] * n_pairs;
    counts[k] = static_cast<int>(std::floor(exact + 1e-9));
    rem[k] = exact - counts[k];
    assigned += counts[k];
  }
  while (assigned < n_pairs) {
    int best = 0;
    for (int k = 1; k < 3; ++k)
      if (rem[k] > rem[best]) best = k;
    ++counts[best];
    rem[best] = -1.0;
    ++assigned;
  }
  std::vector<Scenario> plan;
  for (int k = 0; k < 3; ++k) plan.insert(plan.end(), static_cast<std::size_t>(counts[k]), static_cast<Scenario>(k));
  std::shuffle(plan.begin(), plan.end(), rng);

  const double slot = 30.0;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const Scenario sc = plan[i];
    const double offset = 10.0 + slot * static_cast<double>(i);
    char pid[32], vid[32];
    std::snprintf(pid, sizeof pid, "p%04zu", i);
    std::snprintf(vid, sizeof vid, "v%04zu", i);
    bool ok = false;
    for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
      const auto sp = detail::script_pair(sc, rng, g, offset);
      if (sp.collided || sp.ped_cross_time < 0.0 || sp.veh_cross_time < 0.0) continue;
      const bool veh_first = sp.veh_cross_time < sp.ped_cross_time;
      if ((sc == Scenario::VehicleFirst) != veh_first) continue;
      RawTrack ped{pid, AgentKind::Pedestrian, kPedInScope, sp.ped};
      RawTrack veh{vid, AgentKind::Vehicle, kVehInScope, sp.veh};
      if (extract_pairs({ped, veh}, g, pc).size() != 1) continue;
      corpus.tracks.push_back(std::move(ped));
      corpus.tracks.push_back(std::move(veh));
      corpus.labels[pid] = sc;
      ok = true;
    }
    if (!ok) throw DomainError("synthetic generator could not build a qualifying pair");
  }
  return corpus;
}

}  // namespace crossim
