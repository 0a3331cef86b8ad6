#include "lgnn/io.hpp"
#include "lgnn/plot.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace lgnn;

namespace {

std::filesystem::path tmp(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "lgnn_test_io";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(RunConfig, ProfilesAndOverrides) {
  const RunConfig desk = parse_run_config(json::object());
  EXPECT_EQ(desk.train.epochs, 500u);
  EXPECT_EQ(desk.dataset.trajectories * desk.dataset.points, 500u);
  const RunConfig full = parse_run_config({{"profile", "full"}});
  EXPECT_EQ(full.train.epochs, 10000u);
  EXPECT_EQ(full.dataset.trajectories * full.dataset.points, 10000u);
  const RunConfig c = parse_run_config(
      {{"seed", 7}, {"system", {{"kind", "pendulum"}, {"n", 3}}}, {"train", {{"epochs", 3}}}}, "full");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.system.kind, SystemKind::pendulum);
  EXPECT_EQ(c.train.epochs, 3u);
  EXPECT_EQ(c.train.patience, 500u);
  const LgnnConfig l = lgnn_config_for(c);
  EXPECT_TRUE(l.gravity);
  EXPECT_EQ(l.layers, 2u);
}

TEST(RunConfig, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(parse_run_config({{"sead", 1}}), ValidationError);
  EXPECT_THROW(parse_run_config({{"train", {{"learning_rate", 1}}}}), ValidationError);
  EXPECT_THROW(parse_run_config({{"train", {{"lr", -1.0}}}}), ValidationError);
  EXPECT_THROW(parse_run_config({{"train", {{"epochs", "many"}}}}), ValidationError);
  EXPECT_THROW(parse_run_config({{"profile", "laptop"}}), ValidationError);
  EXPECT_THROW(parse_run_config({{"system", {{"kind", "rope"}}}}), ValidationError);
}

TEST(RunConfig, JsonRoundTrip) {
  RunConfig c = parse_run_config({{"seed", 3}, {"system", {{"kind", "spring"}, {"n", 5}, {"drag", true}}}});
  const RunConfig d = parse_run_config(to_json(c));
  EXPECT_EQ(to_json(c).dump(), to_json(d).dump());
}

TEST(Checkpoint, RoundTripIsBitIdentical) {
  for (const std::string kind : {"lgnn", "lnn"}) {
    RunConfig rc = parse_run_config({{"model", {{"kind", kind}, {"lnn_hidden", 8}}},
                                     {"system", {{"kind", "pendulum"}, {"n", 2}, {"drag", true}}}});
    Checkpoint c = initial_checkpoint(rc);
    Rng rng(1);
    for (Eigen::Index k = 0; k < c.params.size(); ++k) c.params[k] += rng.uniform(-1, 1) * 1e-7;
    c.adam.m = c.params * 0.1;
    c.adam.v = c.params.cwiseAbs();
    c.adam.t = 12;
    c.meta.best_val = 1.0 / 3.0;
    const auto p = tmp("ckpt_" + kind + ".json");
    save_checkpoint(c, p);
    const Checkpoint d = load_checkpoint(p);
    EXPECT_TRUE(c == d) << kind;
    EXPECT_EQ(dump(to_json(c)), read_file(p));
    EXPECT_EQ(dump(to_json(d)), read_file(p));
  }
}

TEST(Checkpoint, VersionMismatchAndTruncation) {
  const Checkpoint c = initial_checkpoint(parse_run_config(json::object()));
  json j = to_json(c);
  j["schema"] = 99;
  EXPECT_THROW(checkpoint_from_json(j), IoError);

  const std::string text = dump(to_json(c));
  const auto p = tmp("truncated.json");
  write_file(p, text.substr(0, text.size() / 2));
  try {
    load_checkpoint(p);
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("byte " + std::to_string(text.size() / 2 + 1)), std::string::npos)
        << e.what();
  }
  EXPECT_THROW(load_checkpoint(tmp("does_not_exist.json")), IoError);
}

TEST(Checkpoint, RejectsMissingOrMisshapenTensors) {
  const Checkpoint c = initial_checkpoint(parse_run_config(json::object()));
  json j = to_json(c);
  j["tensors"].erase("head_T.w0");
  EXPECT_THROW(checkpoint_from_json(j), ValidationError);
  j = to_json(c);
  j["tensors"]["head_T.b2"] = {1.0, 2.0};
  EXPECT_THROW(checkpoint_from_json(j), ValidationError);
  j = to_json(c);
  j["tensors"]["extra"] = {1.0};
  EXPECT_THROW(checkpoint_from_json(j), ValidationError);
}

TEST(Checkpoint, ModelTransfersAcrossSizes) {
  const Checkpoint c = initial_checkpoint(parse_run_config({{"system", {{"n", 5}}}}));
  auto big = make_model(c, make_system(SystemConfig{SystemKind::spring, 50}).graph());
  EXPECT_EQ(big->dof(), 100u);
  Checkpoint l = initial_checkpoint(parse_run_config({{"model", {{"kind", "lnn"}, {"lnn_hidden", 4}}}}));
  EXPECT_THROW(make_model(l, make_system(SystemConfig{SystemKind::spring, 4}).graph()), ValidationError);
}

TEST(Dataset, RoundTripIsBitIdentical) {
  SystemConfig s;
  s.n = 3;
  const Dataset ds = generate_dataset(s, 2, 4, true, 3);
  const auto p = tmp("ds.json");
  save_dataset(ds, p);
  const Dataset back = load_dataset(p);
  ASSERT_EQ(back.size(), ds.size());
  for (std::size_t k = 0; k < ds.size(); ++k) {
    EXPECT_TRUE(back.samples[k].state.q == ds.samples[k].state.q);
    EXPECT_TRUE(back.samples[k].qddot == ds.samples[k].qddot);
    EXPECT_EQ(back.samples[k].state.t, ds.samples[k].state.t);
  }
  EXPECT_EQ(back.meta.system, ds.meta.system);
  EXPECT_EQ(dump(to_json(back)), read_file(p));
}

TEST(Csv, ShortestRoundTripAndHeader) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1e-300), "1e-300");
  std::vector<State> ss{{Vec::Constant(2, 1.0 / 3.0), Vec::Constant(2, -2.5), 0.0},
                        {Vec::Constant(2, 1e-17), Vec::Constant(2, 7.0), 0.1}};
  const std::string csv = trajectory_csv(ss);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,q_0,q_1,qdot_0,qdot_1");
  const auto back = trajectory_from_csv(csv);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_TRUE(back[0].q == ss[0].q);
  EXPECT_TRUE(back[1].qdot == ss[1].qdot);
  EXPECT_EQ(back[1].t, 0.1);
}

TEST(Report, RoundTrip) {
  EvalReport r;
  r.time = {0.0, 0.1};
  r.re = {{0, 0.1}, {0, 0.2}, {0, 0.3}};
  r.ev = r.re;
  r.geo_mean_re = 0.2;
  r.geo_mean_ev = 1.0 / 7.0;
  r.n_trajectories = 2;
  r.momentum_residual = 1e-15;
  r.drag_curve = DragCurve{{-1, 1}, {0.1, -0.1}, -0.1, 0.0, 0.75};
  const json j = to_json(r);
  const EvalReport b = report_from_json(j);
  EXPECT_EQ(to_json(b).dump(), j.dump());
  EXPECT_TRUE(b.re == r.re);
}

TEST(Plot, SvgContainsSeriesAndBand) {
  PlotSeries s{"lgnn", {0, 1, 2}, {1e-3, 1e-2, 1e-1}, {1e-4, 1e-3, 1e-2}, {1e-2, 1e-1, 1.0}};
  const std::string svg = svg_plot({"energy violation", "t", "error", true}, {s});
  EXPECT_NE(svg.find("<polyline"), std::string::npos);
  EXPECT_NE(svg.find("<polygon"), std::string::npos);
  EXPECT_NE(svg.find(">lgnn<"), std::string::npos);
  s.lo.pop_back();
  EXPECT_THROW(svg_plot({}, {s}), ValidationError);
}
