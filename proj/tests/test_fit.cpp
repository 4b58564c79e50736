#include <gtest/gtest.h>

#include "crossim/data.hpp"
#include "crossim/fit.hpp"

using namespace crossim;

TEST(Gp, ExpectedImprovementClosedForm) {
  EXPECT_EQ(expected_improvement(1.0, 0.0, 1.0), 0.0);
  EXPECT_EQ(expected_improvement(0.5, 0.0, 1.0), 0.5);
  EXPECT_NEAR(expected_improvement(1.0, 1.0, 1.0), 0.398942280401432678, 1e-12);
  // z = 1: Phi(1) + phi(1).
  EXPECT_NEAR(expected_improvement(0.0, 1.0, 1.0), 0.841344746068542949 + 0.241970724519143365, 1e-12);
  EXPECT_GE(expected_improvement(10.0, 0.1, 0.0), 0.0);
  EXPECT_THROW(expected_improvement(0.0, -1.0, 0.0), ValidationError);
}

TEST(Gp, OneDimensionalQuadraticMidpoints) {
  Eigen::MatrixXd X(6, 1);
  Eigen::VectorXd y(6);
  for (int i = 0; i < 6; ++i) {
    X(i, 0) = i / 5.0;
    y(i) = std::pow(X(i, 0) - 0.4, 2) + 1.0;
  }
  Rng rng(1);
  const auto gp = GaussianProcess::fit(X, y, rng);
  for (int i = 0; i < 5; ++i) {
    const double x = (i + 0.5) / 5.0;
    const double truth = std::pow(x - 0.4, 2) + 1.0;
    EXPECT_NEAR(gp.predict(Eigen::VectorXd::Constant(1, x)).mean, truth, 0.05 * truth);
  }
}

TEST(Gp, InterpolatesWithSmallVarianceAtTrainingPoints) {
  Rng rng(3);
  Eigen::MatrixXd X(20, 3);
  Eigen::VectorXd y(20);
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 3; ++j) X(i, j) = uniform(rng, 0, 1);
    y(i) = std::sin(3 * X(i, 0)) + X(i, 1) * X(i, 2);
  }
  const auto gp = GaussianProcess::fit(X, y, rng);
  const auto preds = gp.predict_batch(X);
  for (int i = 0; i < 20; ++i) {
    const auto& p = preds[static_cast<std::size_t>(i)];
    EXPECT_GE(p.std, 0.0);
    EXPECT_LE(p.std * p.std, gp.noise_std() * gp.noise_std() + gp.jitter() * gp.signal_std() * gp.signal_std() + 1e-12);
    EXPECT_NEAR(p.mean, y(i), 3.0 * gp.noise_std() + 1e-6);
  }
}

TEST(Gp, DuplicatePointsStayFactorizable) {
  Eigen::MatrixXd X(4, 2);
  X << 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.1, 0.9;
  Eigen::VectorXd y(4);
  y << 1.0, 1.0, 1.0, 2.0;
  Rng rng(0);
  const auto gp = GaussianProcess::fit(X, y, rng);
  EXPECT_TRUE(std::isfinite(gp.predict(Eigen::Vector2d(0.3, 0.3)).mean));
  EXPECT_THROW(GaussianProcess::fit(X.topRows(1), y.head(1), rng), ValidationError);
}

TEST(Fit, RecoversTwoDimensionalBowl) {
  FitConfig cfg;
  cfg.iterations = 40;
  cfg.initial = 10;
  Rng rng(5);
  const PhiVector target_u{0.3, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.8};
  auto obj = [&](const PhiVector& phi, std::uint64_t) {
    const auto u = phi_to_unit(phi);
    return std::pow(u[0] - target_u[0], 2) + std::pow(u[7] - target_u[7], 2);
  };
  const auto r = fit_phi(obj, cfg, rng);
  EXPECT_EQ(r.history.size(), 40u);
  const auto u = phi_to_unit(r.phi_best);
  EXPECT_LT(std::hypot(u[0] - 0.3, u[7] - 0.8), 0.1);
  for (const auto& e : r.history) EXPECT_GE(e.value, r.best_value);
}

TEST(Fit, CommonRandomNumbersShareOneSeed) {
  FitConfig cfg;
  cfg.iterations = 12;
  cfg.initial = 6;
  cfg.seed = 77;
  Rng rng(0);
  std::set<std::uint64_t> seeds;
  auto obj = [&](const PhiVector& phi, std::uint64_t s) {
    seeds.insert(s);
    return phi[0];
  };
  fit_phi(obj, cfg, rng);
  EXPECT_EQ(seeds, std::set<std::uint64_t>{77});
  cfg.common_random_numbers = false;
  seeds.clear();
  Rng rng2(0);
  fit_phi(obj, cfg, rng2);
  EXPECT_EQ(seeds.size(), 12u);
}

TEST(Fit, ConfigValidation) {
  FitConfig cfg;
  cfg.initial = 1;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = {};
  cfg.reps = 0;
  EXPECT_THROW(cfg.validate(), ValidationError);
}

namespace {

std::vector<TrajectorySegment> synthetic_segments(int n) {
  Rng rng(21);
  const auto corpus = generate_synthetic_corpus(n, {}, rng);
  return segment_pairs(extract_pairs(corpus.tracks));
}

}  // namespace

TEST(Fit, SegmentsOfOnePairShareAgentParams) {
  const auto segs = synthetic_segments(2);
  ASSERT_EQ(segs.size(), 6u);
  EnvConfig env;
  env.variant = Variant::VC;
  RandomPolicy ped(ped_layout(env.variant), ped_action_spec(env.variant));
  RandomPolicy veh(veh_layout(env.variant), veh_action_spec(env.variant));
  const auto rolls = rollout_segments(env, ped, veh, segs, to_population_spec(phi_midpoint()), 3, 2.0, 9);
  const auto groups = group_segments_by_pair(segs);
  ASSERT_EQ(groups.size(), 2u);
  for (const auto& g : groups)
    for (int r = 0; r < 3; ++r) {
      const auto& p0 = rolls[g[0]].trajectories[static_cast<std::size_t>(r)].params;
      for (std::size_t si : g) {
        const auto& p = rolls[si].trajectories[static_cast<std::size_t>(r)].params;
        EXPECT_EQ(p.nu_ped, p0.nu_ped);
        EXPECT_EQ(p.w_veh, p0.w_veh);
      }
    }
  for (const auto& sr : rolls)
    for (const auto& t : sr.trajectories) EXPECT_LE(t.steps.size(), 20u);
}

TEST(Fit, MoreRepsLowerObjectiveVariance) {
  const auto segs = synthetic_segments(6);
  EnvConfig env;
  env.variant = Variant::VC;
  RandomPolicy ped(ped_layout(env.variant), ped_action_spec(env.variant));
  RandomPolicy veh(veh_layout(env.variant), veh_action_spec(env.variant));
  const auto kdes = fit_real_kdes(real_segment_metrics(segs, env.geom, env.dt));
  auto variance = [&](int reps) {
    const auto obj = make_nll_objective(env, ped, veh, segs, kdes, reps, 2.0);
    std::vector<double> v;
    for (std::uint64_t s = 0; s < 20; ++s) v.push_back(obj(phi_midpoint(), 1000 + s));
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / 20.0;
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return ss / 19.0;
  };
  EXPECT_LT(variance(5), variance(1));
}

TEST(Fit, ObjectiveIsDeterministicPerSeed) {
  const auto segs = synthetic_segments(2);
  EnvConfig env;
  env.variant = Variant::VMC;
  RandomPolicy ped(ped_layout(env.variant), ped_action_spec(env.variant));
  RandomPolicy veh(veh_layout(env.variant), veh_action_spec(env.variant));
  const auto kdes = fit_real_kdes(real_segment_metrics(segs, env.geom, env.dt));
  const auto obj = make_nll_objective(env, ped, veh, segs, kdes, 2, 2.0);
  EXPECT_EQ(obj(phi_midpoint(), 4), obj(phi_midpoint(), 4));
}
