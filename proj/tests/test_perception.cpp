#include <gtest/gtest.h>

#include "crossim/perception.hpp"

using namespace crossim;

TEST(Perception, NoiseVanishesWithoutAngularNoise) {
  for (double d : {1.0, 5.0, 30.0})
    EXPECT_DOUBLE_EQ(positional_noise_sigma(d, d, RetinalNoiseParams::pedestrian(0.0)), 0.0);
}

TEST(Perception, NoiseGoldenValues) {
  // Reference values from a 30-digit evaluation of the closed form.
  EXPECT_NEAR(positional_noise_sigma(20.0, 20.0, RetinalNoiseParams::pedestrian(0.05)),
              7.74551118072137944, 1e-6);
  EXPECT_NEAR(positional_noise_sigma(20.0, 20.0, RetinalNoiseParams::vehicle(0.05)),
              9.12778604895860806, 1e-6);
}

TEST(Perception, NoiseGrowsWithDistanceAndSaturates) {
  const auto p = RetinalNoiseParams::pedestrian(0.05);
  double prev = 0.0;
  for (double d = 2.0; d < 40.0; d += 2.0) {
    const double s = positional_noise_sigma(d, d, p);
    EXPECT_GT(s, prev);
    prev = s;
  }
  EXPECT_EQ(positional_noise_sigma(500.0, 500.0, RetinalNoiseParams::pedestrian(1.6), 50.0), 50.0);
  EXPECT_THROW(positional_noise_sigma(1.0, 0.0, p), DomainError);
  EXPECT_THROW(positional_noise_sigma(std::nan(""), 1.0, p), ValidationError);
}

TEST(Perception, AcuityShape) {
  EXPECT_DOUBLE_EQ(relative_acuity(0.0), 1.0);
  for (double e : {1.0, 5.0, 10.0, 45.0}) EXPECT_DOUBLE_EQ(relative_acuity(e), relative_acuity(-e));
  EXPECT_NEAR(relative_acuity(10.0), 0.128906003763374711, 1e-6);
  EXPECT_NEAR(relative_acuity(30.0), 0.0414170049106728616, 1e-6);
  double prev = 1.0;
  for (double e = 1.0; e <= 90.0; e += 1.0) {
    EXPECT_LT(relative_acuity(e), prev);
    prev = relative_acuity(e);
  }
}

TEST(Perception, ModulatedSigma) {
  EXPECT_NEAR(modulated_sigma(2.0, 0.0), 2.0 * (1.0 + 1e-5), 1e-15);
  EXPECT_NEAR(modulated_sigma(2.0, 10.0), 2.0 * (1.0 / 0.128906003763374711 + 1e-5), 1e-5);
}

namespace {

// Textbook predict/correct with the plain covariance update P = (I - K H) P.
std::pair<Eigen::Vector2d, Eigen::Matrix2d> reference_step(const Eigen::Vector2d& x,
                                                           const Eigen::Matrix2d& P, double z,
                                                           double r, double dt, double qa) {
  Eigen::Matrix2d F;
  F << 1, dt, 0, 1;
  Eigen::Vector2d G(0.5 * dt * dt, dt);
  const Eigen::Matrix2d Q = qa * qa * G * G.transpose();
  const Eigen::Vector2d xp = F * x;
  const Eigen::Matrix2d Pp = F * P * F.transpose() + Q;
  const Eigen::RowVector2d H(1, 0);
  const double S = (H * Pp * H.transpose())(0, 0) + r * r;
  const Eigen::Vector2d K = Pp * H.transpose() / S;
  return {xp + K * (z - (H * xp)(0)), (Eigen::Matrix2d::Identity() - K * H) * Pp};
}

}  // namespace

TEST(Perception, KalmanMatchesTextbookStep) {
  KalmanBelief b;
  b.mean << 3.0, -1.5;
  b.covariance << 2.0, 0.3, 0.3, 0.5;
  const auto post = kalman_update(b, 2.2, 0.7, 0.1, 0.5);
  const auto [x, P] = reference_step(b.mean, b.covariance, 2.2, 0.7, 0.1, 0.5);
  EXPECT_LT((post.mean - x).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((post.covariance - P).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Perception, KalmanRejectsBadInput) {
  KalmanBelief b;
  b.covariance << 1, 0, 0, 1;
  EXPECT_THROW(kalman_update(b, 0.0, 0.0, 0.1, 0.5), ValidationError);
  EXPECT_THROW(kalman_update(b, 0.0, 1.0, 0.0, 0.5), ValidationError);
  b.covariance << -1, 0, 0, 1;
  EXPECT_THROW(kalman_update(b, 0.0, 1.0, 0.1, 0.5), ValidationError);
}

TEST(Perception, KalmanCovarianceStaysPsdUnderTinyNoise) {
  KalmanBelief b;
  b.covariance << 100.0, 0.0, 0.0, 100.0;
  for (int i = 0; i < 500; ++i) {
    b = kalman_update(b, 1.0, 1e-6, 0.1, 0.5);
    ASSERT_TRUE(is_psd(b.covariance));
  }
}

TEST(Perception, ObservationNoiseIsAcuityModulatedForPedestrianOnly) {
  SceneGeometry g;
  WorldState s;
  s.ped_y = -2.0;
  s.veh_x = -20.0;
  PerceptionConfig pc;
  const auto ped = RetinalNoiseParams::pedestrian(0.05);
  const auto veh = RetinalNoiseParams::vehicle(0.05);
  const double fovea = observation_sigma(s, g, AgentKind::Pedestrian, 0.0, ped, pc);
  EXPECT_GT(fovea, 0.0);
  EXPECT_GT(observation_sigma(s, g, AgentKind::Pedestrian, 30.0, ped, pc), fovea);
  const double v0 = observation_sigma(s, g, AgentKind::Vehicle, 0.0, veh, pc);
  EXPECT_EQ(observation_sigma(s, g, AgentKind::Vehicle, 30.0, veh, pc), v0);
  Rng rng(0);
  EXPECT_THROW(observe_other(s, g, AgentKind::Pedestrian, 0.0, ped, Variant::MC, rng), ContractError);
}
