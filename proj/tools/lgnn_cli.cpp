// lgnn: generate datasets, train, simulate, evaluate and summarise runs.
//
// Exit codes: 0 success, 1 numeric failure (divergence, singular solve,
// aborted rollout), 2 usage, validation or IO error.

#include "lgnn/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace lgnn;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string profile;
};

RunConfig load_config(const Globals& g) {
  json j = g.config.empty() ? json::object() : load_json(g.config);
  std::optional<std::string> profile;
  if (!g.profile.empty()) profile = g.profile;
  RunConfig rc = parse_run_config(j, profile);
  if (g.seed) rc.seed = *g.seed;
  if (!g.out.empty()) rc.out = g.out;
  return rc;
}

int cmd_generate(const Globals& g) {
  const RunConfig rc = load_config(g);
  const Dataset ds = generate_for(rc);
  const fs::path p = fs::path(rc.out) / "dataset.json";
  save_dataset(ds, p);
  std::cout << "wrote " << ds.size() << " samples to " << p.string() << "\n";
  return 0;
}

int cmd_train(const Globals& g, const std::string& dataset, const std::string& resume, bool quiet) {
  const RunConfig rc = load_config(g);
  const fs::path out(rc.out);
  const Dataset ds = load_dataset(dataset.empty() ? out / "dataset.json" : fs::path(dataset));
  std::optional<Checkpoint> prev;
  if (!resume.empty()) prev = load_checkpoint(resume);
  auto log = [&](const EpochRecord& r) {
    if (!quiet && (r.epoch % 50 == 0))
      std::printf("epoch %6zu  train %.6e  val %.6e\n", r.epoch, r.train_loss, r.val_loss);
  };
  const TrainOutcome t = train_for(rc, ds, prev ? &*prev : nullptr, log);
  save_checkpoint(t.checkpoint, out / "checkpoint.json");
  write_file(out / "train_report.json", dump(to_json(t.report)));
  std::vector<double> epochs;
  const std::size_t first = t.checkpoint.meta.epoch - t.report.epochs_run;
  for (std::size_t k = 0; k < t.report.val_loss.size(); ++k) epochs.push_back(static_cast<double>(first + k));
  write_file(out / "loss.csv", columns_csv({"epoch", "train", "val"}, {epochs, t.report.train_loss, t.report.val_loss}));
  write_file(out / "loss.svg", svg_plot({"Training loss", "epoch", "loss", true},
                                        {{"train", epochs, t.report.train_loss, {}, {}},
                                         {"validation", epochs, t.report.val_loss, {}, {}}}));
  std::printf("best val %.6e at epoch %zu (%zu epochs, %.1f s); checkpoint %s\n", t.report.best_val,
              t.report.best_epoch, t.report.epochs_run, t.report.seconds,
              (out / "checkpoint.json").string().c_str());
  return 0;
}

int cmd_simulate(const Globals& g, const std::string& ckpt, bool analytic, double horizon,
                 std::size_t init_index, const std::string& initial_csv) {
  const RunConfig rc = load_config(g);
  if (analytic == !ckpt.empty()) throw ValidationError("simulate: give exactly one of --checkpoint or --analytic");
  const AnalyticSystem sys = make_system(rc.system, rc.drag);
  std::unique_ptr<DynamicsModel> model;
  if (analytic)
    model = std::make_unique<AnalyticModel>(sys);
  else
    model = model_for(rc, load_checkpoint(ckpt));
  State s0;
  if (!initial_csv.empty()) {
    const auto states = trajectory_from_csv(read_file(initial_csv));
    if (states.empty()) throw ValidationError("simulate: initial-state file has no rows");
    s0 = states.front();
  } else {
    s0 = initial_state_for(rc, init_index);
  }
  const RolloutResult r = simulate(rc, *model, s0, horizon > 0 ? horizon : rc.eval.horizon);
  const fs::path p = fs::path(rc.out) / "trajectory.csv";
  write_file(p, trajectory_csv(r.trajectory.states));
  std::cout << "wrote " << r.trajectory.size() << " records to " << p.string() << "\n";
  if (!r.ok()) {
    std::cerr << "rollout aborted at step " << r.failed_step << ": " << *r.error << "\n";
    return 1;
  }
  return 0;
}

int cmd_evaluate(const Globals& g, const std::vector<std::string>& ckpts) {
  const RunConfig rc = load_config(g);
  if (ckpts.empty() || ckpts.size() > 2) throw ValidationError("evaluate: give one checkpoint, or two for the hybrid system");
  std::vector<Checkpoint> cs;
  for (const auto& p : ckpts) cs.push_back(load_checkpoint(p));
  EvalReport rep;
  std::string label;
  if (cs.size() == 2) {
    if (rc.system.kind != SystemKind::hybrid)
      throw ValidationError("evaluate: two checkpoints compose on the hybrid system only");
    const ComposedModel m = hybrid_model(cs[0], cs[1]);
    rep = evaluate_for(rc, m);
    label = "composed lgnn";
  } else {
    const auto m = model_for(rc, cs[0]);
    rep = evaluate_for(rc, *m);
    label = cs[0].model_kind;
  }
  write_eval_outputs(rc.out, rep, label);
  std::printf("geo-mean RE %.4e  geo-mean EV %.4e  failed %zu/%zu (%.1f s); report %s\n", rep.geo_mean_re,
              rep.geo_mean_ev, rep.n_failed, rep.n_trajectories, rep.seconds,
              (fs::path(rc.out) / "report.json").string().c_str());
  if (rep.momentum_residual) std::printf("momentum residual %.3e\n", *rep.momentum_residual);
  if (rep.drag_curve) std::printf("drag slope %.4f\n", rep.drag_curve->slope);
  return 0;
}

int cmd_report(const Globals& g, const std::vector<std::string>& inputs, std::vector<std::string> labels) {
  if (inputs.empty()) throw ValidationError("report: no input reports");
  if (labels.empty())
    for (const auto& p : inputs) labels.push_back(fs::path(p).parent_path().filename().string());
  if (labels.size() != inputs.size()) throw ValidationError("report: one label per input required");
  const fs::path out(g.out.empty() ? "out" : g.out);
  std::vector<PlotSeries> re, ev;
  std::string md = "| run | geo-mean RE | geo-mean EV | momentum residual | failed |\n|---|---|---|---|---|\n";
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const EvalReport r = report_from_json(load_json(inputs[k]));
    re.push_back({labels[k], r.time, r.re.median, r.re.lo, r.re.hi});
    ev.push_back({labels[k], r.time, r.ev.median, r.ev.lo, r.ev.hi});
    char row[256];
    std::snprintf(row, sizeof row, "| %s | %.4e | %.4e | %s | %zu/%zu |\n", labels[k].c_str(), r.geo_mean_re,
                  r.geo_mean_ev,
                  r.momentum_residual ? format_double(*r.momentum_residual).c_str() : "n/a", r.n_failed,
                  r.n_trajectories);
    md += row;
  }
  write_file(out / "summary.md", md);
  write_file(out / "re.svg", svg_plot({"Rollout error", "t (s)", "RE", true}, re));
  write_file(out / "ev.svg", svg_plot({"Energy violation", "t (s)", "energy violation", true}, ev));
  std::cout << md;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lagrangian graph neural network simulator"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "run configuration (JSON)");
  app.add_option("--seed", g.seed, "override the run seed");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--profile", g.profile, "full or desk defaults")->check(CLI::IsMember({"full", "desk"}));

  auto* gen = app.add_subcommand("generate", "simulate the analytic system and write dataset.json")->fallthrough();

  std::string dataset, resume;
  bool quiet = false;
  auto* tr = app.add_subcommand("train", "train a model and write checkpoint.json")->fallthrough();
  tr->add_option("--dataset", dataset, "dataset file (default <out>/dataset.json)");
  tr->add_option("--resume", resume, "continue from this checkpoint");
  tr->add_flag("--quiet", quiet, "no per-epoch log");

  std::string ckpt, initial;
  bool analytic = false;
  double horizon = 0.0;
  std::size_t init_index = 0;
  auto* sim = app.add_subcommand("simulate", "roll out a model and write trajectory.csv")->fallthrough();
  sim->add_option("--checkpoint", ckpt, "trained model");
  sim->add_flag("--analytic", analytic, "use the ground-truth Lagrangian");
  sim->add_option("--horizon", horizon, "seconds (default eval.horizon)");
  sim->add_option("--init-index", init_index, "which seeded initial condition");
  sim->add_option("--initial-state", initial, "CSV whose first row is the initial state");

  std::vector<std::string> ckpts;
  auto* ev = app.add_subcommand("evaluate", "compare rollouts against ground truth")->fallthrough();
  ev->add_option("--checkpoint", ckpts, "checkpoint; give two (pendulum, spring) for the hybrid system")->required();

  std::vector<std::string> inputs, labels;
  auto* rep = app.add_subcommand("report", "summarise evaluation reports")->fallthrough();
  rep->add_option("inputs", inputs, "report.json files")->required();
  rep->add_option("--labels", labels, "one label per report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) return cmd_generate(g);
    if (tr->parsed()) return cmd_train(g, dataset, resume, quiet);
    if (sim->parsed()) return cmd_simulate(g, ckpt, analytic, horizon, init_index, initial);
    if (ev->parsed()) return cmd_evaluate(g, ckpts);
    if (rep->parsed()) return cmd_report(g, inputs, labels);
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 1;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 1;
  } catch (const TrainingError& e) {
    std::cerr << "training diverged at epoch " << e.epoch() << ": " << e.what() << "\n";
    return 1;
  } catch (const DatasetError& e) {
    std::cerr << "dataset error (trajectory seed " << e.trajectory_seed() << "): " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
