#include "lgnn/integrators.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace lgnn;

namespace {

State one_d(double x, double v) { return {Vec::Constant(1, x), Vec::Constant(1, v), 0.0}; }

const AccelFn oscillator = [](const State& s) { return Vec(-s.q); };

double osc_energy(const State& s) { return 0.5 * (s.q[0] * s.q[0] + s.qdot[0] * s.qdot[0]); }

}  // namespace

TEST(VerletStep, UniformMotion) {
  State s{(Vec(2) << 1, 2).finished(), (Vec(2) << 0.5, -1).finished(), 0.0};
  State n = verlet_step([](const State& x) { return Vec(Vec::Zero(x.q.size())); }, s, 0.1);
  EXPECT_EQ(n.q, s.q + 0.1 * s.qdot);
  EXPECT_EQ(n.qdot, s.qdot);
  EXPECT_DOUBLE_EQ(n.t, 0.1);
}

TEST(VerletStep, ConstantAccelerationIsExact) {
  const double g = 9.81, dt = 1e-2;
  State s{Vec::Zero(2), (Vec(2) << 1, 2).finished(), 0.0};
  AccelFn a = [g](const State&) { return (Vec(2) << 0, -g).finished(); };
  for (int i = 0; i < 100; ++i) s = verlet_step(a, s, dt);
  const double t = 1.0;
  EXPECT_NEAR(s.q[0], t, 1e-12);
  EXPECT_NEAR(s.q[1], 2 * t - 0.5 * g * t * t, 1e-10);
  EXPECT_NEAR(s.qdot[1], 2 - g * t, 1e-10);
}

TEST(VerletStep, HarmonicOscillatorEnergy) {
  State s = one_d(1.0, 0.0);
  const double e0 = osc_energy(s);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    s = verlet_step(oscillator, s, 1e-3);
    worst = std::max(worst, std::abs(osc_energy(s) - e0) / e0);
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(VerletStep, TimeReversible) {
  State s0 = one_d(0.3, -0.8);
  State s = s0;
  for (int i = 0; i < 1000; ++i) s = verlet_step(oscillator, s, 1e-4);
  s.qdot = -s.qdot;
  for (int i = 0; i < 1000; ++i) s = verlet_step(oscillator, s, 1e-4);
  EXPECT_NEAR(s.q[0], s0.q[0], 1e-8);
  EXPECT_NEAR(-s.qdot[0], s0.qdot[0], 1e-8);
}

TEST(VerletStep, NonFiniteCarriesStepIndex) {
  AccelFn bad = [](const State& s) { return Vec(s.q.array() / 0.0); };
  try {
    verlet_step(bad, one_d(1, 0), 0.1, 17);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_EQ(e.index(), 17);
  }
  EXPECT_THROW(verlet_step(oscillator, one_d(1, 0), 0.0), ValidationError);
}

TEST(Rollout, StrideEqualsSteps) {
  auto r = rollout(oscillator, one_d(1, 0), 1e-3, 50, 50);
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.trajectory.size(), 2u);
  EXPECT_EQ(r.trajectory.accels.size(), 2u);
}

TEST(Rollout, RecordingInterval) {
  auto r = rollout(oscillator, one_d(1, 0), 1e-5, 5000, 1000);
  ASSERT_EQ(r.trajectory.size(), 6u);
  for (std::size_t i = 1; i < r.trajectory.size(); ++i)
    EXPECT_NEAR(r.trajectory.states[i].t - r.trajectory.states[i - 1].t, 0.01, 1e-12);
  auto s = rollout(oscillator, one_d(1, 0), 1e-3, 1000, 100);
  EXPECT_NEAR(s.trajectory.states[1].t, 0.1, 1e-12);
}

TEST(Rollout, RecordedAccelerationsMatchFreshEvaluation) {
  AccelFn damped = [](const State& s) { return Vec(-s.q - 0.1 * s.qdot); };
  auto r = rollout(damped, one_d(1, 0.5), 1e-3, 300, 10);
  for (std::size_t i = 0; i < r.trajectory.size(); ++i)
    ASSERT_EQ(r.trajectory.accels[i], damped(r.trajectory.states[i]));
}

TEST(Rollout, DeterministicBitIdentical) {
  auto a = rollout(oscillator, one_d(0.7, 0.2), 1e-3, 500, 7);
  auto b = rollout(oscillator, one_d(0.7, 0.2), 1e-3, 500, 7);
  ASSERT_EQ(a.trajectory.size(), b.trajectory.size());
  for (std::size_t i = 0; i < a.trajectory.size(); ++i) {
    ASSERT_EQ(a.trajectory.states[i].q, b.trajectory.states[i].q);
    ASSERT_EQ(a.trajectory.states[i].qdot, b.trajectory.states[i].qdot);
  }
}

TEST(Rollout, AbortReturnsPrefix) {
  AccelFn blowup = [](const State& s) {
    if (s.t > 0.0105) return Vec(Vec::Constant(1, std::nan("")));
    return Vec(Vec::Zero(1));
  };
  auto r = rollout(blowup, one_d(0, 1), 1e-3, 100, 5);
  EXPECT_FALSE(r.ok());
  EXPECT_EQ(r.trajectory.size(), 3u);  // t = 0, 0.005, 0.010
  EXPECT_GT(r.failed_step, 0);
}

TEST(Rollout, ValidatesArguments) {
  EXPECT_THROW(rollout(oscillator, one_d(1, 0), 1e-3, 0, 1), ValidationError);
  EXPECT_THROW(rollout(oscillator, one_d(1, 0), 1e-3, 10, 0), ValidationError);
}
