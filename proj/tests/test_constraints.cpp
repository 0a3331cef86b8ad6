#include "lgnn/analytic.hpp"
#include "lgnn/constraints.hpp"
#include "lgnn/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace lgnn;

namespace {

State state2(std::vector<double> q, std::vector<double> qd) {
  State s;
  s.q = Eigen::Map<Vec>(q.data(), static_cast<Eigen::Index>(q.size()));
  s.qdot = Eigen::Map<Vec>(qd.data(), static_cast<Eigen::Index>(qd.size()));
  return s;
}

// On-manifold chain state from angles and angular rates (unit bars).
State chain_state(const std::vector<double>& th, const std::vector<double>& w) {
  const std::size_t n = th.size();
  State s{Vec::Zero(2 * n), Vec::Zero(2 * n), 0.0};
  double x = 0, y = 0, vx = 0, vy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    x += std::sin(th[i]);
    y -= std::cos(th[i]);
    vx += w[i] * std::cos(th[i]);
    vy += w[i] * std::sin(th[i]);
    s.q[2 * i] = x;
    s.q[2 * i + 1] = y;
    s.qdot[2 * i] = vx;
    s.qdot[2 * i + 1] = vy;
  }
  return s;
}

}  // namespace

TEST(PendulumConstraints, SingleBobRow) {
  auto c = pendulum_constraints(1, {1.0});
  EXPECT_EQ(c.k, 1u);
  Mat A = c.A((Vec(2) << 0, -1).finished());
  EXPECT_EQ(A, (Mat(1, 2) << 0, -1).finished());
}

TEST(PendulumConstraints, TwoBobBlocks) {
  auto c = pendulum_constraints(2, {1.0, 1.0});
  Vec q(4);
  q << 0.6, -0.8, 1.1, -1.6;
  Mat A = c.A(q);
  ASSERT_EQ(A.rows(), 2);
  const Vec d = q.segment(2, 2) - q.segment(0, 2);
  EXPECT_EQ(A.block(1, 2, 1, 2), d.transpose());
  EXPECT_EQ(A.block(1, 0, 1, 2), -d.transpose());
  EXPECT_EQ(A.block(0, 0, 1, 2), q.segment(0, 2).transpose());
  EXPECT_TRUE(A.block(0, 2, 1, 2).isZero(0.0));
}

TEST(PendulumConstraints, RejectsBadInput) {
  EXPECT_THROW(pendulum_constraints(0, {}), ValidationError);
  EXPECT_THROW(pendulum_constraints(2, {1.0}), ValidationError);
  EXPECT_THROW(pendulum_constraints(1, {-1.0}), ValidationError);
}

TEST(PfaffianResidual, Examples) {
  auto c = pendulum_constraints(1, {1.0});
  EXPECT_EQ(pfaffian_residual(c, state2({0, -1}, {0, 0}))[0], 0.0);
  EXPECT_EQ(pfaffian_residual(c, state2({1, 0}, {0, 1}))[0], 0.0);
  EXPECT_EQ(pfaffian_residual(c, state2({1, 0}, {1, 0}))[0], 1.0);
}

TEST(PfaffianResidual, OnManifoldChainIsZero) {
  Rng rng(11);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> th(4), w(4);
    for (auto& x : th) x = rng.uniform(-3, 3);
    for (auto& x : w) x = rng.uniform(-2, 2);
    auto c = pendulum_constraints(4, std::vector<double>(4, 1.0));
    ASSERT_LT(pfaffian_residual(c, chain_state(th, w)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ConstraintConsistency, AdotMatchesFiniteDifference) {
  Rng rng(5);
  for (std::size_t n : {1u, 2u, 3u}) {
    for (int t = 0; t < 3; ++t) {
      std::vector<double> th(n), w(n);
      for (auto& x : th) x = rng.uniform(-1.5, 1.5);
      for (auto& x : w) x = rng.uniform(-2, 2);
      auto c = pendulum_constraints(n, std::vector<double>(n, 1.0));
      EXPECT_LT(constraint_consistency_check(c, chain_state(th, w), 1e-6), 1e-6);
    }
  }
}

TEST(ConstraintConsistency, StaticStateIsZero) {
  auto c = pendulum_constraints(2, {1.0, 1.0});
  EXPECT_EQ(constraint_consistency_check(c, state2({0, -1, 0, -2}, {0, 0, 0, 0})), 0.0);
  EXPECT_THROW(constraint_consistency_check(c, state2({0, -1, 0, -2}, {0, 0, 0, 0}), 0.0),
               ValidationError);
}

TEST(ConstraintSpec, SpringsContributeNoRows) {
  EXPECT_EQ(make_spring(5).constraints().k, 0u);
  EXPECT_EQ(make_hybrid().constraints().k, 2u);
  EXPECT_EQ(make_pendulum(3).constraints().k, 3u);
}

TEST(Projection, RestoresLengthsAndTangentVelocity) {
  auto bars = pendulum_bars(2, {1.0, 1.0});
  State s = state2({0.0, -1.1, 0.3, -1.9}, {0.4, 0.2, -0.1, 0.5});
  project_onto_bars(bars, 2, s);
  EXPECT_LT(max_bar_length_error(bars, 2, s.q), 1e-14);
  auto c = bar_constraints(bars, 2, 2);
  EXPECT_LT(pfaffian_residual(c, s).cwiseAbs().maxCoeff(), 1e-14);
}
