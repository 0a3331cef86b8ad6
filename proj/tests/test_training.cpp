#include "lgnn/lgnn.hpp"
#include "lgnn/lnn.hpp"
#include "lgnn/training.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace lgnn;

TEST(Loss, Examples) {
  const Vec y = Vec::LinSpaced(6, -1.0, 1.0);
  EXPECT_EQ(sample_loss(y, y, LossKind::l2), 0.0);
  EXPECT_NEAR(sample_loss(y.array() + 0.3, y, LossKind::l2), 0.09, 1e-15);
  EXPECT_NEAR(sample_loss(y.array() - 0.3, y, LossKind::l1), 0.3, 1e-15);
  EXPECT_THROW(sample_loss(y, Vec::Zero(4), LossKind::l2), ValidationError);
  EXPECT_EQ(parse_loss_kind("l1"), LossKind::l1);
  EXPECT_THROW(parse_loss_kind("huber"), ValidationError);
}

TEST(Loss, GradientMatchesFd) {
  Rng rng(1);
  Vec p(5), y(5);
  for (int k = 0; k < 5; ++k) {
    p[k] = rng.uniform(-1, 1);
    y[k] = rng.uniform(-1, 1);
  }
  for (auto kind : {LossKind::l2, LossKind::l1}) {
    const Vec g = sample_loss_gradient(p, y, kind);
    for (int k = 0; k < 5; ++k) {
      Vec a = p, b = p;
      a[k] += 1e-7;
      b[k] -= 1e-7;
      EXPECT_NEAR((sample_loss(a, y, kind) - sample_loss(b, y, kind)) / 2e-7, g[k], 1e-7);
    }
  }
}

TEST(Adam, ZeroGradLeavesParamsAndDecaysMoments) {
  Vec p = Vec::Ones(3);
  AdamState st;
  adam_step(p, Vec::Constant(3, 2.0), st);
  const Vec m1 = st.m, p1 = p;
  adam_step(p, Vec::Zero(3), st);
  EXPECT_TRUE(st.m.isApprox(0.9 * m1));
  // Bias-corrected first moment stays non-zero, so params still move; with
  // zero moments they would not.
  AdamState fresh;
  Vec q = Vec::Ones(3);
  adam_step(q, Vec::Zero(3), fresh);
  EXPECT_TRUE(q == Vec::Ones(3));
  EXPECT_EQ(st.t, 2u);
}

TEST(Adam, FirstStepIsLrTimesSign) {
  Vec p = Vec::Zero(3);
  AdamState st;
  Vec g(3);
  g << 0.5, -3.0, 1e-3;
  adam_step(p, g, st, {1e-3, 0.9, 0.999, 1e-8});
  EXPECT_NEAR(p[0], -1e-3, 1e-10);
  EXPECT_NEAR(p[1], 1e-3, 1e-10);
  EXPECT_NEAR(p[2], -1e-3, 1e-8);
}

TEST(Adam, Deterministic) {
  Vec a = Vec::Ones(4), b = Vec::Ones(4);
  AdamState sa, sb;
  const Vec g = Vec::LinSpaced(4, -1, 2);
  adam_step(a, g, sa);
  adam_step(b, g, sb);
  EXPECT_TRUE(a == b);
}

namespace {

struct Tiny {
  SystemConfig sys;
  Dataset train, val;
  AnalyticSystem system;
};

Tiny tiny(SystemKind kind, bool drag, std::size_t samples_per_traj = 20) {
  Tiny t;
  t.sys.kind = kind;
  t.sys.n = 2;
  if (kind == SystemKind::pendulum) t.sys.stride = 100;
  const Dataset ds = generate_dataset(t.sys, 2, samples_per_traj, drag, 5);
  std::tie(t.train, t.val) = split_dataset(ds, 0.75, 6);
  t.system = make_system(t.sys, drag);
  return t;
}

}  // namespace

TEST(TrainGradient, DirectionalDerivativeMatchesFd) {
  for (auto kind : {SystemKind::spring, SystemKind::pendulum}) {
    const Tiny t = tiny(kind, true, 3);
    LgnnConfig c;
    c.hidden = 3;
    c.drag = true;
    c.gravity = kind == SystemKind::pendulum;
    c.layers = 2;
    auto net = std::make_shared<LgnnNetwork>(c, 7);
    Rng rng(8);
    for (Eigen::Index k = 0; k < net->params.size(); ++k) net->params[k] += rng.uniform(-0.3, 0.3);
    LgnnModel m(net, t.system.graph());
    const auto spec = t.system.constraints();
    Vec g = Vec::Zero(net->params.size());
    const Sample& smp = t.train.samples[1];
    sample_loss_and_gradient(m, spec, smp, LossKind::l2, 1.0,
                             {g.data(), static_cast<std::size_t>(g.size())});
    Vec dir(g.size());
    for (Eigen::Index k = 0; k < dir.size(); ++k) dir[k] = rng.uniform(-1, 1);
    const Vec p0 = net->params;
    auto L = [&](double s) {
      net->params = p0 + s * dir;
      return sample_loss(solve_acceleration(m, spec, {}, smp.state).qddot, smp.qddot, LossKind::l2);
    };
    const double h = 1e-6;
    const double fd = (L(h) - L(-h)) / (2 * h);
    net->params = p0;
    EXPECT_NEAR(g.dot(dir), fd, 1e-4 * std::abs(fd)) << to_string(kind);
  }
}

TEST(Train, ReducesLossAndReturnsBest) {
  const Tiny t = tiny(SystemKind::spring, false);
  LgnnModel m(std::make_shared<LgnnNetwork>(LgnnConfig{}, 1), t.system.graph());
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.batch = 10;
  cfg.patience = 1000;
  const auto rep = train(m, t.system.constraints(), t.train, t.val, cfg);
  ASSERT_EQ(rep.val_loss.size(), 31u);
  EXPECT_LT(rep.best_val, rep.val_loss[0]);
  for (double v : rep.val_loss) EXPECT_LE(rep.best_val, v);
  EXPECT_EQ(rep.val_loss[rep.best_epoch], rep.best_val);
  EXPECT_NEAR(dataset_loss(m, t.system.constraints(), t.val, LossKind::l2), rep.best_val, 1e-14);
}

TEST(Train, BitIdenticalForFixedSeed) {
  const Tiny t = tiny(SystemKind::spring, false);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.batch = 7;
  Vec params[2];
  std::vector<double> curves[2];
  for (int r = 0; r < 2; ++r) {
    LgnnModel m(std::make_shared<LgnnNetwork>(LgnnConfig{}, 2), t.system.graph());
    const auto rep = train(m, t.system.constraints(), t.train, t.val, cfg);
    params[r] = m.parameters();
    curves[r] = rep.val_loss;
  }
  EXPECT_TRUE(params[0] == params[1]);
  EXPECT_EQ(curves[0], curves[1]);
}

TEST(Train, EarlyStopsAfterPatience) {
  const Tiny t = tiny(SystemKind::spring, false);
  LgnnModel m(std::make_shared<LgnnNetwork>(LgnnConfig{}, 3), t.system.graph());
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.patience = 2;
  cfg.adam.lr = 10.0;  // wild steps stop improving quickly
  try {
    const auto rep = train(m, t.system.constraints(), t.train, t.val, cfg);
    EXPECT_TRUE(rep.early_stopped);
    EXPECT_LE(rep.epochs_run, rep.best_epoch + 2);
  } catch (const TrainingError& e) {
    EXPECT_GE(e.epoch(), 1);  // divergence is reported with its epoch
  }
}

TEST(Train, FullBatchEqualsOneStepPerEpoch) {
  const Tiny t = tiny(SystemKind::spring, false);
  LgnnModel m(std::make_shared<LgnnNetwork>(LgnnConfig{}, 4), t.system.graph());
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch = t.train.size();
  cfg.patience = 100;
  const auto rep = train(m, t.system.constraints(), t.train, t.val, cfg);
  EXPECT_EQ(rep.adam.t, 3u);
}

TEST(Train, LnnTrains) {
  const Tiny t = tiny(SystemKind::spring, false);
  LnnModel m({2, 2, 16}, 5);
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.batch = 10;
  const auto rep = train(m, t.system.constraints(), t.train, t.val, cfg);
  EXPECT_LT(rep.best_val, rep.val_loss[0]);
}

TEST(Train, RejectsEmptyAndBadConfig) {
  const Tiny t = tiny(SystemKind::spring, false);
  LgnnModel m(std::make_shared<LgnnNetwork>(LgnnConfig{}, 1), t.system.graph());
  TrainConfig cfg;
  EXPECT_THROW(train(m, t.system.constraints(), Dataset{}, t.val, cfg), ValidationError);
  cfg.batch = 0;
  EXPECT_THROW(train(m, t.system.constraints(), t.train, t.val, cfg), ValidationError);
}
