#include <gtest/gtest.h>

#include <cmath>

#include "miloc/error.hpp"
#include "miloc/pair_ml.hpp"
#include "miloc/scenario.hpp"
#include "oracles.hpp"

namespace miloc {
namespace {

constexpr double kC = 3.0279567070605292e-05;

LinkMeasurement noiseless_link(const Deployment& agent, const Deployment& anchor, double c = kC) {
  return LinkMeasurement{0, 1, channel_matrix(agent, anchor, c), LinkKind::AgentAnchor};
}

TEST(DecomposeLink, NoiselessRecoversOrientationAndScore) {
  Rng rng(11);
  for (int i = 0; i < 300; ++i) {
    const auto [agent, anchor] = testing::random_link(rng);
    const auto dec = decompose_link(channel_matrix(agent, anchor, kC), anchor);
    const double r = (agent.position() - anchor.position()).norm();
    EXPECT_LT((dec.orientation * agent.rotation().transpose() - Mat3::Identity()).norm(), 1e-9);
    EXPECT_NEAR(dec.z, 1.5 * kC / std::pow(r, 3), 1e-9 * dec.z);
  }
}

TEST(DecomposeLink, OrientationIsProperForArbitraryMatrices) {
  Rng rng(12);
  std::normal_distribution<double> n;
  const Deployment anchor(Vec3::Zero(), {0.4, -0.3, 2.0});
  for (int i = 0; i < 500; ++i) {
    CMat3 h = CMat3::Zero();
    for (int k = 0; k < 9; ++k) h(k / 3, k % 3) = {n(rng), n(rng)};
    const auto dec = decompose_link(h, anchor);
    EXPECT_TRUE(is_rotation(dec.orientation, 1e-10));
    Eigen::SelfAdjointEigenSolver<Mat3> es(dec.dipole);
    EXPECT_NEAR(es.eigenvalues()[0], -0.5, 1e-12);
    EXPECT_NEAR(es.eigenvalues()[1], -0.5, 1e-12);
    EXPECT_NEAR(es.eigenvalues()[2], 1.0, 1e-12);
  }
}

TEST(DecomposeLink, ScoreMatchesDirectSearch) {
  Rng rng(13);
  std::normal_distribution<double> n;
  const Deployment anchor(Vec3::Zero(), {});
  for (int i = 0; i < 12; ++i) {
    Mat3 A;
    for (int k = 0; k < 9; ++k) A(k / 3, k % 3) = n(rng);
    // With an identity anchor, A = Im{h}^T.
    CMat3 h = CMat3::Zero();
    h.imag() = A.transpose();
    const auto dec = decompose_link(h, anchor);
    const double brute = testing::brute_force_trace_max(A);
    EXPECT_NEAR(dec.z, brute, 1e-6 * std::abs(brute)) << "trial " << i;
    const Vec3 u = dec.svd.V.col(0);
    EXPECT_NEAR((A * dipole_factor(u) * dec.orientation).trace(), dec.z, 1e-12 * std::abs(dec.z));
  }
}

TEST(DecomposeLink, SingularVectorSignsDoNotMatter) {
  Rng rng(14);
  std::normal_distribution<double> n;
  for (int i = 0; i < 100; ++i) {
    Mat3 A;
    for (int k = 0; k < 9; ++k) A(k / 3, k % 3) = n(rng);
    const auto canon = canonical_svd(A);
    for (int j = 0; j < 3; ++j) {
      Eigen::Index idx = 0;
      canon.V.col(j).cwiseAbs().maxCoeff(&idx);
      EXPECT_GT(canon.V(idx, j), 0.0);
    }
    const auto closed_form = [](const Mat3& U, const Mat3& V) {
      const double d = (U * V.transpose()).determinant() < 0 ? -1.0 : 1.0;
      return Mat3(V * Vec3(1.0, -1.0, -d).asDiagonal() * U.transpose());
    };
    for (int j = 0; j < 3; ++j) {
      Mat3 U = canon.U, V = canon.V;
      U.col(j) *= -1;
      V.col(j) *= -1;
      EXPECT_TRUE(closed_form(U, V).isApprox(closed_form(canon.U, canon.V), 1e-12));
    }
  }
}

TEST(DecomposeLink, ScaleEquivariance) {
  Rng rng(15);
  const auto [agent, anchor] = testing::random_link(rng);
  const CMat3 h = add_noise(channel_matrix(agent, anchor, kC), 2e-5, rng);
  const auto base = decompose_link(h, anchor);
  const auto scaled = decompose_link(h * 7.0, anchor);
  EXPECT_NEAR(scaled.z, 7.0 * base.z, 1e-12 * scaled.z);
  EXPECT_TRUE(scaled.orientation.isApprox(base.orientation, 1e-12));
  EXPECT_NEAR(ml_distance(scaled.z, kC), ml_distance(base.z, kC) / std::cbrt(7.0), 1e-12);
}

TEST(DecomposeLink, RejectsVanishingMeasurement) {
  try {
    decompose_link(CMat3::Zero(), Deployment{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateMeasurement);
  }
}

TEST(MlDistance, InvertsTheNoiselessScore) {
  for (double r : {0.15, 0.5, 1.0, 2.0}) {
    EXPECT_NEAR(ml_distance(1.5 * kC / std::pow(r, 3), kC), r, 1e-12);
  }
  try {
    ml_distance(0.0, kC);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroScore);
  }
  EXPECT_THROW(ml_distance(-1.0, kC), Error);
}

TEST(MlDistance, MatchesOneDimensionalScan) {
  // Profile cost over r once orientation and direction are maximized:
  //   -2 g z + ||F||_F^2 g^2 with g = c / r^3 and ||F||_F^2 = 3/2.
  for (double z : {1e-4, 3.6e-4, 5e-3}) {
    double best_r = 0.0, best = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= 200000; ++i) {
      const double r = 1e-5 * i;
      const double g = kC / (r * r * r);
      const double cost = -2.0 * g * z + 1.5 * g * g;
      if (cost < best) {
        best = cost;
        best_r = r;
      }
    }
    EXPECT_NEAR(ml_distance(z, kC), best_r, 1e-5);
  }
}

TEST(DirectionEstimate, CoaxialLinkGivesAxis) {
  const Deployment tx(Vec3::Zero(), {});
  const Deployment rx(Vec3(0.5, 0, 0), {});
  const auto dec = decompose_link(channel_matrix(tx, rx, kC), rx);
  const Vec3 u = direction_estimate(dec.svd);
  EXPECT_NEAR(std::abs(u.x()), 1.0, 1e-12);
  EXPECT_NEAR(u.tail<2>().norm(), 0.0, 1e-12);
}

TEST(DirectionEstimate, ParallelUpToSign) {
  Rng rng(16);
  for (int i = 0; i < 300; ++i) {
    const auto [agent, anchor] = testing::random_link(rng);
    const Vec3 u_true = (anchor.position() - agent.position()).normalized();
    const auto dec = decompose_link(channel_matrix(agent, anchor, kC), anchor);
    EXPECT_NEAR(std::abs(direction_estimate(dec.svd).dot(u_true)), 1.0, 1e-9);
  }
}

TEST(DirectionEstimate, RejectsRepeatedLeadingValue) {
  SvdTriple svd;
  svd.s = Vec3(1.0, 1.0, 0.5);
  try {
    direction_estimate(svd);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::AmbiguousDirection);
  }
}

TEST(ResolvePosition, Cases) {
  const Room room = Room::cube(1.5);
  const auto unique = resolve_position(Vec3(0, 0.75, 0.75), Vec3::UnitX(), 0.5, room);
  EXPECT_EQ(unique.validity, Validity::UniqueInRoom);
  ASSERT_TRUE(unique.chosen.has_value());
  EXPECT_TRUE(unique.chosen->isApprox(Vec3(0.5, 0.75, 0.75)));

  const auto flipped = resolve_position(Vec3(0, 0.75, 0.75), -Vec3::UnitX(), 0.5, room);
  EXPECT_TRUE(flipped.chosen->isApprox(Vec3(0.5, 0.75, 0.75)));

  const auto both = resolve_position(room.center(), Vec3::UnitY(), 0.3, room);
  EXPECT_EQ(both.validity, Validity::BothInRoom);
  EXPECT_FALSE(both.chosen.has_value());

  const auto none = resolve_position(room.center(), Vec3::UnitZ(), 5.0, room);
  EXPECT_EQ(none.validity, Validity::NoneInRoom);
  EXPECT_FALSE(none.chosen.has_value());
}

TEST(PairMlEstimate, NoiselessRecoversDeployment) {
  Rng rng(17);
  const Room room = Room::cube(1.5);
  const auto anchors = default_anchors(room);
  const CouplingTable coupling(CoilParams::from_diameter(0.05, 5, 1.0), GlobalParams{});
  for (int i = 0; i < 200; ++i) {
    const Topology top = sample_topology(1, room, anchors, 0.15, rng);
    const auto links = model_links(top, coupling, Scheme::NonCooperative);
    const auto est = pair_ml_estimate(links, anchors, 1, coupling, room);
    EXPECT_EQ(est.pick, PairMlPick::Unique);
    EXPECT_LT((est.deployment.position() - top.agents[0].position()).norm(), 1e-8);
    EXPECT_LT(rotation_angle_between(est.deployment.rotation(), top.agents[0].rotation()), 1e-8);
    // Nearest link first.
    for (std::size_t k = 1; k < est.links.size(); ++k) {
      EXPECT_LE(est.links[k - 1].distance, est.links[k].distance);
    }
  }
}

TEST(PairMlEstimate, SingleAnchorSuffices) {
  const Room room = Room::cube(1.5);
  const std::vector<Deployment> anchors = {Deployment(Vec3(0, 0.75, 0.75), {})};
  const Deployment agent(Vec3(0.6, 0.9, 0.4), {0.3, 0.2, -1.1});
  const std::vector<LinkMeasurement> links = {
      LinkMeasurement{0, 1, channel_matrix(agent, anchors[0], kC), LinkKind::AgentAnchor}};
  const CouplingTable coupling(CoilParams::from_diameter(0.05, 5, 1.0), GlobalParams{});
  const auto est = pair_ml_estimate(links, anchors, 1, coupling, room);
  EXPECT_EQ(est.anchor, 1u);
  EXPECT_LT((est.deployment.position() - agent.position()).norm(), 1e-8);
}

TEST(PairMlEstimate, FallbackRules) {
  const Room room = Room::cube(1.5);
  const CouplingTable coupling(CoilParams::from_diameter(0.05, 5, 1.0), GlobalParams{});
  // Anchor at the room center: both mirror candidates are inside.
  const std::vector<Deployment> anchors = {Deployment(room.center(), {})};
  const Deployment agent(room.center() + Vec3(0.2, 0.1, -0.1), {0.5, 0.1, 0.2});
  std::vector<LinkMeasurement> links = {noiseless_link(agent, anchors[0])};
  auto est = pair_ml_estimate(links, anchors, 1, coupling, room);
  EXPECT_EQ(est.pick, PairMlPick::FallbackBoth);
  const double off = (est.deployment.position() - room.center()).norm();
  EXPECT_NEAR(off, (agent.position() - room.center()).norm(), 1e-9);

  // A much stronger assumed coupling pushes both candidates outside.
  const CouplingTable weak(CoilParams::from_diameter(0.05, 5, 1.0e-4), GlobalParams{});
  const std::vector<Deployment> wall = {Deployment(Vec3(0, 0.75, 0.75), {})};
  links = {noiseless_link(Deployment(Vec3(1.0, 0.75, 0.75), {}), wall[0])};
  est = pair_ml_estimate(links, wall, 1, weak, room);
  EXPECT_EQ(est.pick, PairMlPick::FallbackNone);
  EXPECT_TRUE(room.contains(est.deployment.position()));
}

TEST(PairMlEstimate, ThrowsWithoutUsableLinks) {
  const Room room = Room::cube(1.5);
  const CouplingTable coupling(CoilParams::from_diameter(0.05, 5, 1.0), GlobalParams{});
  const auto anchors = default_anchors(room);
  try {
    pair_ml_estimate({}, anchors, 1, coupling, room);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoMeasurements);
  }
  const std::vector<LinkMeasurement> zeros = {LinkMeasurement{0, 1, CMat3::Zero(), LinkKind::AgentAnchor}};
  EXPECT_THROW(pair_ml_estimate(zeros, anchors, 1, coupling, room), Error);
}

}  // namespace
}  // namespace miloc
