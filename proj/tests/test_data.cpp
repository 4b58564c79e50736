#include <gtest/gtest.h>

#include <sstream>

#include "crossim/data.hpp"

using namespace crossim;

namespace {

RawTrack line_track(std::string id, AgentKind kind, std::string dir, double t0, double t1, double x0,
                    double y0, double vx, double vy) {
  RawTrack tr{std::move(id), kind, std::move(dir), {}};
  for (double t = t0; t <= t1 + 1e-9; t += 0.05)
    tr.samples.push_back({t, x0 + vx * (t - t0), y0 + vy * (t - t0)});
  return tr;
}

// Pedestrian in the approach zone over [0, 10] s; vehicle within 25 m of the
// crossing over [3, 13] s. Overlap 7 s.
std::vector<RawTrack> good_pair(const std::string& tag = "", double t_off = 0.0) {
  return {line_track("p" + tag, AgentKind::Pedestrian, "East", t_off, t_off + 10.0, 0.5, -6.0, 0.0, 0.8),
          line_track("v" + tag, AgentKind::Vehicle, "North", t_off, t_off + 16.0, -40.0, 0.0, 5.0, 0.0)};
}

}  // namespace

TEST(Data, ExtractsOneAlignedPair) {
  const auto pairs = extract_pairs(good_pair());
  ASSERT_EQ(pairs.size(), 1u);
  const auto& p = pairs[0];
  EXPECT_EQ(p.id, "p|v");
  EXPECT_NEAR(p.t_start, 3.0, 1e-12);
  ASSERT_EQ(p.samples.size(), 60u);
  for (std::size_t i = 0; i < p.samples.size(); ++i) {
    const auto& s = p.samples[i];
    EXPECT_NEAR(s.t, 3.0 + 0.1 * static_cast<double>(i), 1e-9);
    EXPECT_NEAR(s.ped_y, -6.0 + 0.8 * s.t, 1e-9);
    EXPECT_NEAR(s.veh_x, -40.0 + 5.0 * s.t, 1e-9);
    EXPECT_NEAR(s.ped_speed, 0.8, 1e-9);
    EXPECT_NEAR(s.ped_heading, 0.0, 1e-12);
    EXPECT_NEAR(s.veh_speed, 5.0, 1e-9);
    EXPECT_NEAR(s.veh_accel, 0.0, 1e-6);
  }
}

TEST(Data, RejectsShortOverlap) {
  // Vehicle reaches the zone at t = 4.5 s: overlap 5.5 s.
  std::vector<RawTrack> t{line_track("p", AgentKind::Pedestrian, "East", 0.0, 10.0, 0.5, -6.0, 0.0, 0.8),
                          line_track("v", AgentKind::Vehicle, "North", 0.0, 16.0, -47.5, 0.0, 5.0, 0.0)};
  EXPECT_TRUE(extract_pairs(t).empty());
  // Exactly 6 s is kept.
  t[1] = line_track("v", AgentKind::Vehicle, "North", 0.0, 16.0, -45.0, 0.0, 5.0, 0.0);
  EXPECT_EQ(extract_pairs(t).size(), 1u);
}

TEST(Data, RejectsTwoVehicleFixture) {
  auto t = good_pair();
  t.push_back(line_track("v2", AgentKind::Vehicle, "North", 1.0, 17.0, -40.0, 0.0, 5.0, 0.0));
  EXPECT_TRUE(extract_pairs(t).empty());
}

TEST(Data, VehicleSharedByTwoPedestriansIsRejected) {
  auto t = good_pair();
  t.push_back(line_track("p2", AgentKind::Pedestrian, "East", 0.0, 10.0, -1.0, -6.0, 0.0, 0.8));
  EXPECT_TRUE(extract_pairs(t).empty());
}

TEST(Data, DirectionFilter) {
  auto t = good_pair();
  t[1].direction = "South";
  EXPECT_TRUE(extract_pairs(t).empty());
  t = good_pair();
  t[0].direction = "West";
  EXPECT_TRUE(extract_pairs(t).empty());
}

TEST(Data, RefugePedestrianRemovesVehicle) {
  auto t = good_pair();
  // Waiting on the island (y in [1.75, 3.75]) while the vehicle is upstream.
  t.push_back(line_track("w", AgentKind::Pedestrian, "West", 2.0, 6.0, 0.0, 2.5, 0.0, 0.0));
  EXPECT_TRUE(extract_pairs(t).empty());
  auto late = good_pair();
  late.push_back(line_track("w", AgentKind::Pedestrian, "West", 12.0, 14.0, 0.0, 2.5, 0.0, 0.0));
  EXPECT_EQ(extract_pairs(late).size(), 1u);
}

TEST(Data, PedestrianTruncatedToInnerZone) {
  // Walks along the kerb from x = -19 toward the crossing; only |x| <= 10
  // counts for the window.
  std::vector<RawTrack> t{line_track("p", AgentKind::Pedestrian, "East", 0.0, 20.0, -19.0, -3.0, 1.0, 0.0),
                          line_track("v", AgentKind::Vehicle, "North", 0.0, 30.0, -60.0, 0.0, 4.0, 0.0)};
  const auto pairs = extract_pairs(t);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_NEAR(pairs[0].t_start, 9.0, 1e-9);
  for (const auto& s : pairs[0].samples) EXPECT_LE(std::abs(s.ped_x), 10.0 + 1e-9);
}

TEST(Data, OutputIndependentOfInputOrder) {
  std::vector<RawTrack> t;
  for (int i = 0; i < 4; ++i) {
    auto g = good_pair(std::to_string(i), 30.0 * i);
    t.insert(t.end(), g.begin(), g.end());
  }
  const auto a = extract_pairs(t);
  std::reverse(t.begin(), t.end());
  EXPECT_EQ(extract_pairs(t), a);
  EXPECT_EQ(a.size(), 4u);
}

TEST(Data, ThreeSegmentsPerPair) {
  const auto pairs = extract_pairs(good_pair());
  const auto segs = segment_pairs(pairs);
  ASSERT_EQ(segs.size(), 3u);
  for (int k = 0; k < 3; ++k) {
    const auto& s = segs[static_cast<std::size_t>(k)];
    EXPECT_EQ(s.index, k);
    EXPECT_EQ(s.samples.size(), 20u);
    EXPECT_NEAR(s.initial.t, 2.0 * k, 1e-9);
    EXPECT_EQ(s.initial.ped_y, s.samples.front().ped_y);
    const auto st = segment_states(s);
    EXPECT_NEAR(st.back().t - st.front().t, 1.9, 1e-9);
  }
  auto bad = pairs;
  bad[0].samples.pop_back();
  EXPECT_THROW(segment_pairs(bad), ValidationError);
}

TEST(Data, CsvRoundTripAndErrors) {
  const auto t = good_pair();
  std::stringstream ss;
  write_tracks_csv(ss, t);
  const auto back = read_tracks_csv(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].samples.size(), t[0].samples.size());
  EXPECT_EQ(extract_pairs(back).size(), 1u);

  std::stringstream bad("id,kind\n");
  EXPECT_THROW(read_tracks_csv(bad), ValidationError);
  std::stringstream kind("track_id,kind,direction,t,x,y\na,bike,East,0,0,0\n");
  EXPECT_THROW(read_tracks_csv(kind), ValidationError);
  std::stringstream order("track_id,kind,direction,t,x,y\na,ped,East,1,0,0\na,ped,East,0.5,0,0\n");
  EXPECT_THROW(read_tracks_csv(order), ValidationError);
}

TEST(Data, SyntheticCorpusYieldsConstructedPairs) {
  Rng rng(12);
  const auto corpus = generate_synthetic_corpus(12, {}, rng);
  EXPECT_EQ(corpus.tracks.size(), 24u);
  EXPECT_EQ(corpus.labels.size(), 12u);
  const auto pairs = extract_pairs(corpus.tracks);
  ASSERT_EQ(pairs.size(), 12u);
  std::map<Scenario, int> counts;
  for (const auto& p : pairs) {
    ASSERT_TRUE(corpus.labels.count(p.ped_id));
    ++counts[corpus.labels.at(p.ped_id)];
    EXPECT_EQ(p.veh_id.substr(1), p.ped_id.substr(1));
  }
  EXPECT_EQ(counts[Scenario::VehicleFirst], 4);
  EXPECT_EQ(counts[Scenario::PedFirstYield], 4);
  EXPECT_EQ(counts[Scenario::PedFirstNoYield], 4);
  EXPECT_EQ(segment_pairs(pairs).size(), 36u);
}

TEST(Data, InitialKdeNeedsTwoPairs) {
  EXPECT_THROW(fit_initial_kde(extract_pairs(good_pair())), ValidationError);
  auto t = good_pair("a");
  auto u = good_pair("b", 30.0);
  t.insert(t.end(), u.begin(), u.end());
  EXPECT_EQ(fit_initial_kde(extract_pairs(t)).dims(), 5u);
}
