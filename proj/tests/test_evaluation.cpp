#include "lgnn/evaluation.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace lgnn;

namespace {

std::vector<State> states(std::initializer_list<std::vector<double>> qs) {
  std::vector<State> out;
  for (const auto& q : qs) {
    Vec v = Eigen::Map<const Vec>(q.data(), static_cast<Eigen::Index>(q.size()));
    out.push_back({v, Vec::Zero(v.size()), 0.0});
  }
  return out;
}

}  // namespace

TEST(RolloutError, Examples) {
  const auto t = states({{0, 0}, {1, 2}, {-3, 0.5}});
  for (double e : rollout_error(t, t)) EXPECT_EQ(e, 0.0);
  const auto neg = states({{0, 0}, {-1, -2}, {3, -0.5}});
  const auto re = rollout_error(neg, t);
  EXPECT_EQ(re[0], 0.0);
  EXPECT_DOUBLE_EQ(re[1], 1.0);
  const auto dbl = states({{0, 0}, {2, 4}, {-6, 1}});
  EXPECT_NEAR(rollout_error(dbl, t)[2], 1.0 / 3.0, 1e-15);
  EXPECT_EQ(rollout_error(t, dbl), rollout_error(dbl, t));
  EXPECT_THROW(rollout_error(states({{1, 1}}), t), ValidationError);
}

TEST(EnergyViolation, Examples) {
  const auto t = states({{1, 0}, {2, 0}});
  const Hamiltonian H = [](const State& s) { return s.q[0]; };
  for (double e : energy_violation(t, t, H)) EXPECT_EQ(e, 0.0);
  const auto tri = states({{3, 0}, {6, 0}});
  for (double e : energy_violation(tri, t, H)) EXPECT_DOUBLE_EQ(e, 0.5);
  EXPECT_EQ(energy_violation(tri, t, H), energy_violation(t, tri, H));
}

TEST(GeometricMean, Examples) {
  EXPECT_DOUBLE_EQ(geometric_mean({1, 1, 1}), 1.0);
  EXPECT_NEAR(geometric_mean({1e-2, 1e-4}), 1e-3, 1e-18);
  EXPECT_NEAR(geometric_mean({0, 0}), 1e-12, 1e-24);
  EXPECT_LE(geometric_mean({0.1, 0.2}), geometric_mean({0.1, 0.3}));
}

TEST(Percentile, LinearInterpolation) {
  EXPECT_DOUBLE_EQ(percentile({3, 1, 2}, 50), 2.0);
  EXPECT_DOUBLE_EQ(percentile({0, 10}, 2.5), 0.25);
  const Band b = percentile_band({{1, 2, 3}});
  EXPECT_EQ(b.lo, b.hi);
  EXPECT_EQ(b.median, (std::vector<double>{1, 2, 3}));
}

TEST(MomentumResidual, LgnnStructuralAndGravityRejected) {
  auto g = build_system_graph({Topology::ring, 4, 2, {}, 0, {}});
  LgnnModel m(std::make_shared<LgnnNetwork>(LgnnConfig{}, 3), g);
  Rng rng(4);
  std::vector<State> ss;
  for (int k = 0; k < 20; ++k) {
    State s{Vec(8), Vec::Zero(8), 0.0};
    for (int i = 0; i < 8; ++i) s.q[i] = rng.uniform(-2, 2);
    ss.push_back(s);
  }
  EXPECT_LT(momentum_residual(m, ss), 1e-10);

  LgnnModel single(std::make_shared<LgnnNetwork>(LgnnConfig{}, 3),
                   build_system_graph({Topology::chain, 1, 2, {}, 0, {}}));
  EXPECT_EQ(momentum_residual(single, {State{Vec::Ones(2), Vec::Zero(2), 0.0}}), 0.0);

  LgnnConfig grav;
  grav.gravity = true;
  LgnnModel gm(std::make_shared<LgnnNetwork>(grav, 3), g);
  EXPECT_THROW(momentum_residual(gm, ss), ValidationError);
}

TEST(DragCurve, UntrainedIsZeroAndSlopeFit) {
  LgnnConfig c;
  c.drag = true;
  LgnnNetwork net(c, 1);
  const auto curve = extract_drag_curve(net, linspace(-1, 1, 11));
  for (double d : curve.drag_x) EXPECT_EQ(d, 0.0);
  EXPECT_EQ(curve.slope, 0.0);

  // Output bias of the drag head shifts every value; the fitted slope stays 0.
  const auto& L = net.layout->head_D;
  net.params[static_cast<Eigen::Index>(L.layers[2].bias(0))] = 0.25;
  const auto shifted = extract_drag_curve(net, linspace(-1, 1, 5));
  EXPECT_NEAR(shifted.intercept, 0.25, 1e-15);
  EXPECT_NEAR(shifted.slope, 0.0, 1e-15);
}

TEST(DragCurve, ReferenceMassRescalesByLearnedMass) {
  LgnnConfig c;
  c.drag = true;
  LgnnNetwork net(c, 4);
  const auto& L = net.layout->head_D;
  net.params[static_cast<Eigen::Index>(L.layers[2].bias(0))] = 0.5;
  const double m = lgnn_particle_mass(net, 0);
  ASSERT_GT(m, 0.0);
  const auto a = extract_drag_curve(net, linspace(-1, 1, 3), 0, 2.0);
  EXPECT_NEAR(a.scale, 2.0 / m, 1e-15);
  EXPECT_NEAR(a.drag_x[1], 0.5 * 2.0 / m, 1e-12);
}

TEST(EvaluateSuite, AnalyticAgainstItselfIsZero) {
  SystemConfig c;
  c.n = 3;
  const AnalyticModel m(make_system(c));
  EvalConfig e;
  e.n_init = 3;
  e.horizon = 1.0;
  const auto rep = evaluate_suite(m, c, false, e);
  ASSERT_EQ(rep.time.size(), 10u);
  for (double x : rep.re.hi) EXPECT_EQ(x, 0.0);
  for (double x : rep.ev.hi) EXPECT_EQ(x, 0.0);
  EXPECT_NEAR(rep.geo_mean_re, kGeoMeanFloor, 1e-24);
  EXPECT_EQ(rep.n_failed, 0u);
}

TEST(EvaluateSuite, SingleInitialConditionCollapsesBand) {
  SystemConfig c;
  c.n = 3;
  LgnnModel m(std::make_shared<LgnnNetwork>(LgnnConfig{}, 1), make_system(c).graph());
  EvalConfig e;
  e.n_init = 1;
  e.horizon = 0.5;
  const auto rep = evaluate_suite(m, c, false, e);
  EXPECT_EQ(rep.re.lo, rep.re.hi);
  ASSERT_TRUE(rep.momentum_residual.has_value());
  EXPECT_LT(*rep.momentum_residual, 1e-10);
  for (double x : rep.re.median) {
    EXPECT_GE(x, 0.0);
    EXPECT_LE(x, 1.0);
  }
}

TEST(EvaluateSuite, RejectsMismatchedModel) {
  SystemConfig c;
  c.n = 3;
  SystemConfig other = c;
  other.n = 4;
  const AnalyticModel m(make_system(other));
  EXPECT_THROW(evaluate_suite(m, c, false, {}), ValidationError);
}
