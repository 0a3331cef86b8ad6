#pragma once

// End-to-end steps shared by the command-line tool and the acceptance
// suite: generate, train, simulate, evaluate, and their file outputs.

#include "lgnn/compose.hpp"
#include "lgnn/io.hpp"
#include "lgnn/plot.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <string>

namespace lgnn {

inline Dataset generate_for(const RunConfig& rc) {
  return generate_dataset(rc.system, rc.dataset.trajectories, rc.dataset.points, rc.drag,
                          stream_seed(rc, SeedStream::dataset));
}

struct TrainOutcome {
  Checkpoint checkpoint;
  TrainReport report;
};

/// Trains the configured model (or continues `resume`) on the dataset's
/// system. The checkpoint holds the best-validation parameters.
inline TrainOutcome train_for(const RunConfig& rc, const Dataset& ds, const Checkpoint* resume = nullptr,
                              const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  RunConfig sys_rc = rc;
  sys_rc.system = ds.meta.system;
  sys_rc.drag = ds.meta.drag;
  Checkpoint ck = resume ? *resume : initial_checkpoint(sys_rc);
  if (resume) {
    ck.system = ds.meta.system;
    ck.drag = ds.meta.drag;
  }
  const AnalyticSystem sys = make_system(ds.meta.system, ds.meta.drag);
  auto model = make_model(ck, sys.graph());
  auto [tr, va] = split_dataset(ds, rc.dataset.split, stream_seed(rc, SeedStream::split));
  TrainConfig tc = rc.train;
  tc.seed = stream_seed(rc, SeedStream::shuffle);
  TrainOutcome out;
  out.report = train(*model, sys.constraints(), tr, va, tc, on_epoch, resume ? &ck.adam : nullptr,
                     resume ? ck.meta.epoch : 0);
  ck.params = model->parameters();
  ck.adam = out.report.adam;
  ck.meta.seed = rc.seed;
  ck.meta.epoch = (resume ? ck.meta.epoch : 0) + out.report.epochs_run;
  ck.meta.best_epoch = out.report.best_epoch;
  ck.meta.best_val = out.report.best_val;
  ck.meta.loss = rc.train.loss;
  out.checkpoint = std::move(ck);
  return out;
}

/// Deterministic training summary (no wall-clock time).
inline json to_json(const TrainReport& r) {
  return {{"train_loss", r.train_loss}, {"val_loss", r.val_loss}, {"best_epoch", r.best_epoch},
          {"best_val", r.best_val},     {"epochs_run", r.epochs_run}, {"early_stopped", r.early_stopped}};
}

/// Model of the checkpoint on the configured system.
inline std::unique_ptr<TrainableModel> model_for(const RunConfig& rc, const Checkpoint& ck) {
  return make_model(ck, make_system(rc.system, rc.drag).graph());
}

/// Pendulum-trained and spring-trained LGNNs composed on the hybrid system.
inline ComposedModel hybrid_model(const Checkpoint& pendulum, const Checkpoint& spring) {
  const AnalyticSystem sys = make_hybrid();
  const SystemGraph g = sys.graph();
  std::vector<Edge> pe, se;
  for (const auto& e : g.edges) (e.i < 2 && e.j < 2 ? pe : se).push_back(e);
  return compose_hybrid(g, pe, {0, 1}, lgnn_network(pendulum), se, lgnn_network(spring));
}

inline EvalReport evaluate_for(const RunConfig& rc, const DynamicsModel& model) {
  EvalConfig ec = rc.eval;
  ec.seed = stream_seed(rc, SeedStream::eval);
  return evaluate_suite(model, rc.system, rc.drag, ec);
}

/// Seeded initial condition `index` of the configured system.
inline State initial_state_for(const RunConfig& rc, std::size_t index) {
  Rng rng(derive_seed(stream_seed(rc, SeedStream::eval), index));
  return sample_initial_conditions(make_system(rc.system, rc.drag), rc.system, rng);
}

inline RolloutResult simulate(const RunConfig& rc, const DynamicsModel& model, const State& s0,
                              double horizon) {
  const AnalyticSystem sys = make_system(rc.system, rc.drag);
  const double dt = rc.system.step();
  const std::size_t stride = rc.system.record_stride();
  const std::size_t records = records_for(horizon, dt, stride);
  return rollout(make_accel_fn(model, sys.constraints()), s0, dt, (records - 1) * stride, stride);
}

/// report.json, re.csv, ev.csv and their plots (plus drag curve files).
inline void write_eval_outputs(const std::filesystem::path& dir, const EvalReport& r, const std::string& label) {
  write_file(dir / "report.json", dump(to_json(r)));
  write_file(dir / "re.csv", columns_csv({"t", "lo", "median", "hi"}, {r.time, r.re.lo, r.re.median, r.re.hi}));
  write_file(dir / "ev.csv", columns_csv({"t", "lo", "median", "hi"}, {r.time, r.ev.lo, r.ev.median, r.ev.hi}));
  write_file(dir / "re.svg", svg_plot({"Rollout error", "t (s)", "RE", true},
                                      {{label, r.time, r.re.median, r.re.lo, r.re.hi}}));
  write_file(dir / "ev.svg", svg_plot({"Energy violation", "t (s)", "energy violation", true},
                                      {{label, r.time, r.ev.median, r.ev.lo, r.ev.hi}}));
  if (r.drag_curve) {
    const auto& d = *r.drag_curve;
    write_file(dir / "drag.csv", columns_csv({"v", "drag_x"}, {d.v, d.drag_x}));
    write_file(dir / "drag.svg", svg_plot({"Learned drag", "qdot_x", "drag_x", false}, {{label, d.v, d.drag_x, {}, {}}}));
  }
}

}  // namespace lgnn
