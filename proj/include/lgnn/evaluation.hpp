#pragma once

// Rollout metrics against ground truth, conservation diagnostics and the
// learned drag curve.

#include "lgnn/analytic.hpp"
#include "lgnn/datagen.hpp"
#include "lgnn/integrators.hpp"
#include "lgnn/lgnn.hpp"
#include "lgnn/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

namespace lgnn {

inline constexpr double kGeoMeanFloor = 1e-12;

namespace detail {

inline double relative(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

inline void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    throw ValidationError(std::string(what) + ": trajectories have " + std::to_string(a) + " and " +
                          std::to_string(b) + " records");
}

}  // namespace detail

/// RE(t) = |q_pred - q_true| / (|q_pred| + |q_true|), 0/0 = 0.
inline std::vector<double> rollout_error(const std::vector<State>& pred, const std::vector<State>& truth) {
  detail::require_same_length(pred.size(), truth.size(), "rollout_error");
  std::vector<double> out(pred.size());
  for (std::size_t k = 0; k < pred.size(); ++k) {
    if (pred[k].q.size() != truth[k].q.size())
      throw ValidationError("rollout_error: state sizes differ at record " + std::to_string(k));
    out[k] = detail::relative((pred[k].q - truth[k].q).norm(), pred[k].q.norm() + truth[k].q.norm());
  }
  return out;
}

inline std::vector<double> rollout_error(const Trajectory& pred, const Trajectory& truth) {
  if (pred.dt != truth.dt || pred.stride != truth.stride)
    throw ValidationError("rollout_error: trajectories use different time steps");
  return rollout_error(pred.states, truth.states);
}

using Hamiltonian = std::function<double(const State&)>;

/// |H(pred) - H(truth)| / (|H(pred)| + |H(truth)|) per record, with H the
/// ground-truth energy.
inline std::vector<double> energy_violation(const std::vector<State>& pred,
                                            const std::vector<State>& truth, const Hamiltonian& H) {
  detail::require_same_length(pred.size(), truth.size(), "energy_violation");
  std::vector<double> out(pred.size());
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const double hp = H(pred[k]), ht = H(truth[k]);
    out[k] = detail::relative(std::abs(hp - ht), std::abs(hp) + std::abs(ht));
  }
  return out;
}

/// exp(mean(log(max(x, 1e-12)))); 1e-12 for an empty curve.
inline double geometric_mean(const std::vector<double>& xs) {
  if (xs.empty()) return kGeoMeanFloor;
  double acc = 0.0;
  for (double x : xs) acc += std::log(std::max(x, kGeoMeanFloor));
  return std::exp(acc / static_cast<double>(xs.size()));
}

/// max over states of |sum_i dV/dq_i|_inf.
inline double momentum_residual(const TrainableModel& model, const std::vector<State>& states) {
  if (model.external_field())
    throw ValidationError("momentum_residual: model has an external field; momentum is not conserved");
  const std::size_t D = model.dim(), n = model.dof() / D;
  double worst = 0.0;
  for (const auto& s : states) {
    validate_state(s, model.dof());
    const Vec g = model.potential_gradient(s.q);
    Vec total = Vec::Zero(static_cast<Eigen::Index>(D));
    for (std::size_t i = 0; i < n; ++i)
      total += g.segment(static_cast<Eigen::Index>(i * D), static_cast<Eigen::Index>(D));
    worst = std::max(worst, total.cwiseAbs().maxCoeff());
  }
  return worst;
}

struct DragCurve {
  std::vector<double> v;       // velocity along +x
  std::vector<double> drag_x;  // x component of the learned drag
  double slope = 0.0;          // least-squares line fit
  double intercept = 0.0;
  double scale = 1.0;          // factor applied to the raw head output
};

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k)
    out[k] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
  return out;
}

/// Single-particle drag over a sweep of x velocities. The learned
/// Lagrangian and drag share one arbitrary scale; with reference_mass > 0
/// the drag is rescaled to a particle whose learned mass equals it.
inline DragCurve extract_drag_curve(const LgnnNetwork& net, const std::vector<double>& grid, int type = 0,
                                    double reference_mass = 0.0) {
  DragCurve c;
  c.v = grid;
  if (reference_mass > 0.0) {
    const double m = lgnn_particle_mass(net, type);
    if (!(m > 0.0)) throw NumericError("drag curve: learned particle mass is not positive");
    c.scale = reference_mass / m;
  }
  const std::size_t D = net.config().dim;
  for (double v : grid) {
    Vec qd = Vec::Zero(static_cast<Eigen::Index>(D));
    qd[0] = v;
    c.drag_x.push_back(c.scale * lgnn_particle_drag(net, type, qd)[0]);
  }
  const auto n = static_cast<double>(grid.size());
  if (grid.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      sx += c.v[k];
      sy += c.drag_x[k];
      sxx += c.v[k] * c.v[k];
      sxy += c.v[k] * c.drag_x[k];
    }
    const double den = n * sxx - sx * sx;
    if (den != 0.0) {
      c.slope = (n * sxy - sx * sy) / den;
      c.intercept = (sy - c.slope * sx) / n;
    }
  }
  return c;
}

/// Linear-interpolation percentile (p in [0, 100]) of an unsorted sample.
inline double percentile(std::vector<double> xs, double p) {
  if (xs.empty()) throw ValidationError("percentile: empty sample");
  std::sort(xs.begin(), xs.end());
  const double pos = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

struct Band {
  std::vector<double> lo, median, hi;  // 2.5 / 50 / 97.5 percentiles per record
};

inline Band percentile_band(const std::vector<std::vector<double>>& curves) {
  Band b;
  if (curves.empty()) return b;
  const std::size_t T = curves.front().size();
  std::vector<double> col(curves.size());
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t k = 0; k < curves.size(); ++k) col[k] = curves[k].at(t);
    b.lo.push_back(percentile(col, 2.5));
    b.median.push_back(percentile(col, 50.0));
    b.hi.push_back(percentile(col, 97.5));
  }
  return b;
}

struct EvalConfig {
  std::size_t n_init = 100;
  double horizon = 1.0;    // seconds; records_for(horizon, dt, stride) records
  double dt = 0.0;         // 0: the system's data-generation step
  std::size_t stride = 0;  // 0: the system's data-generation stride
  std::uint64_t seed = 0;
};

struct EvalReport {
  std::vector<double> time;
  Band re;  // rollout error across initial conditions
  Band ev;  // energy violation across initial conditions
  double geo_mean_re = 0.0;
  double geo_mean_ev = 0.0;
  std::optional<double> momentum_residual;
  std::optional<DragCurve> drag_curve;
  std::size_t n_trajectories = 0;
  std::size_t n_failed = 0;  // predicted rollouts that aborted early
  std::vector<std::string> failures;
  double seconds = 0.0;
};

/// Rolls the model and the analytic ground truth from n_init seeded initial
/// conditions. Records past an aborted predicted rollout count as RE = EV = 1,
/// the maximum of both normalised errors. Geometric means run over every
/// trajectory and every record after t = 0.
inline EvalReport evaluate_suite(const DynamicsModel& model, const SystemConfig& sys_cfg, bool drag,
                                 const EvalConfig& cfg) {
  if (cfg.n_init < 1) throw ValidationError("evaluate: n_init must be >= 1");
  const auto t0 = std::chrono::steady_clock::now();
  const AnalyticSystem sys = make_system(sys_cfg, drag);
  if (model.dof() != sys.dof())
    throw ValidationError("evaluate: model has " + std::to_string(model.dof()) +
                          " coordinates, system has " + std::to_string(sys.dof()));
  const AnalyticModel truth_model(sys);
  const ConstraintSpec spec = sys.constraints();
  const double dt = cfg.dt > 0 ? cfg.dt : sys_cfg.step();
  const std::size_t stride = cfg.stride > 0 ? cfg.stride : sys_cfg.record_stride();
  const std::size_t records = records_for(cfg.horizon, dt, stride);
  if (records < 2) throw ValidationError("evaluate: horizon shorter than two record intervals");
  const std::size_t steps = (records - 1) * stride;

  const AccelFn truth_accel = make_accel_fn(truth_model, spec);
  const AccelFn pred_accel = make_accel_fn(model, spec);
  const Hamiltonian H = [&](const State& s) { return truth_model.hamiltonian(s); };

  EvalReport rep;
  rep.n_trajectories = cfg.n_init;
  std::vector<std::vector<double>> res, evs;
  std::vector<double> all_re, all_ev;
  std::vector<State> truth_states;
  for (std::size_t k = 0; k < cfg.n_init; ++k) {
    Rng rng(derive_seed(cfg.seed, k));
    const State s0 = sample_initial_conditions(sys, sys_cfg, rng);
    const RolloutResult truth = rollout(truth_accel, s0, dt, steps, stride);
    if (!truth.ok())
      throw NumericError("evaluate: ground-truth rollout " + std::to_string(k) + " failed: " + *truth.error);
    const RolloutResult pred = rollout(pred_accel, s0, dt, steps, stride);
    const std::size_t m = pred.trajectory.size();
    std::vector<State> t_states(truth.trajectory.states.begin(),
                                truth.trajectory.states.begin() + static_cast<long>(m));
    auto re = rollout_error(pred.trajectory.states, t_states);
    auto ev = energy_violation(pred.trajectory.states, t_states, H);
    if (!pred.ok()) {
      ++rep.n_failed;
      rep.failures.push_back("initial condition " + std::to_string(k) + ": " + *pred.error);
    }
    re.resize(truth.trajectory.size(), 1.0);
    ev.resize(truth.trajectory.size(), 1.0);
    all_re.insert(all_re.end(), re.begin() + 1, re.end());
    all_ev.insert(all_ev.end(), ev.begin() + 1, ev.end());
    res.push_back(std::move(re));
    evs.push_back(std::move(ev));
    truth_states.insert(truth_states.end(), truth.trajectory.states.begin(), truth.trajectory.states.end());
    if (k == 0)
      for (const auto& s : truth.trajectory.states) rep.time.push_back(s.t);
  }
  rep.re = percentile_band(res);
  rep.ev = percentile_band(evs);
  rep.geo_mean_re = geometric_mean(all_re);
  rep.geo_mean_ev = geometric_mean(all_ev);
  if (const auto* tm = dynamic_cast<const TrainableModel*>(&model); tm && !tm->external_field())
    rep.momentum_residual = momentum_residual(*tm, truth_states);
  if (const auto* lm = dynamic_cast<const LgnnModel*>(&model); lm && lm->network().config().drag)
    rep.drag_curve = extract_drag_curve(lm->network(), linspace(-1.0, 1.0, 21), 0, sys.masses[0]);
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace lgnn
