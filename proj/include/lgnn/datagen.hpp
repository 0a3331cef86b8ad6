#pragma once

// Training data from simulated analytic systems: sampled states with
// their exact accelerations.

#include "lgnn/analytic.hpp"
#include "lgnn/dynamics.hpp"
#include "lgnn/integrators.hpp"
#include "lgnn/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace lgnn {

/// Physical parameters and sampling ranges of one experimental system.
struct SystemConfig {
  SystemKind kind = SystemKind::spring;
  std::size_t n = 3;  // ignored for hybrid (always 4)
  std::size_t dim = 2;
  double mass = 1.0;
  double length = 1.0;
  double k = 1.0;
  double r0 = 1.0;
  double g = 9.81;
  double drag_coefficient = 0.1;  // used when drag is switched on
  double angle_range = std::numbers::pi / 2;  // pendulum angles in [-a, a]
  double position_noise = 0.1;                // spring positions, in units of r0
  double velocity_range = 0.5;                // spring velocities in [-v, v]
  double dt = 0.0;                            // 0: 1e-5 pendulum/hybrid, 1e-3 spring
  std::size_t stride = 0;                     // 0: 1000 pendulum/hybrid, 100 spring

  double step() const { return dt > 0 ? dt : (kind == SystemKind::spring ? 1e-3 : 1e-5); }
  std::size_t record_stride() const {
    return stride > 0 ? stride : (kind == SystemKind::spring ? 100 : 1000);
  }
  /// Recording interval in seconds.
  double record_interval() const { return step() * static_cast<double>(record_stride()); }

  friend bool operator==(const SystemConfig&, const SystemConfig&) = default;
};

inline AnalyticSystem make_system(const SystemConfig& c, bool drag = false) {
  if (!(c.angle_range >= 0) || !(c.position_noise >= 0) || !(c.velocity_range >= 0))
    throw ValidationError("system config: sampling ranges must be non-negative");
  AnalyticSystem s;
  switch (c.kind) {
    case SystemKind::pendulum: s = make_pendulum(c.n, c.mass, c.length, c.g, c.dim); break;
    case SystemKind::spring: s = make_spring(c.n, c.mass, c.k, c.r0, c.dim); break;
    case SystemKind::hybrid:
      if (c.dim != 2) throw ValidationError("hybrid system is planar (dim 2)");
      s = make_hybrid(c.mass, c.length, c.k, c.r0, c.g);
      break;
  }
  s.drag = drag ? c.drag_coefficient : 0.0;
  s.validate();
  return s;
}

/// Radius of a regular n-gon with side r0.
inline double ring_radius(std::size_t n, double r0) {
  return n < 2 ? 0.0 : r0 / (2.0 * std::sin(std::numbers::pi / static_cast<double>(n)));
}

namespace detail {

// Positions of a hanging chain from angles measured from the downward vertical.
inline void place_chain(State& s, std::size_t dim, const std::vector<double>& angles,
                        const std::vector<double>& lengths) {
  double x = 0.0, y = 0.0;
  for (std::size_t i = 0; i < angles.size(); ++i) {
    x += lengths[i] * std::sin(angles[i]);
    y -= lengths[i] * std::cos(angles[i]);
    s.q[static_cast<Eigen::Index>(i * dim)] = x;
    s.q[static_cast<Eigen::Index>(i * dim + 1)] = y;
  }
}

}  // namespace detail

/// Pendulum: angles uniform in [-angle_range, angle_range], at rest.
/// Spring: regular ring with side r0, uniform position noise and velocities.
/// Hybrid: pendulum bobs as above; the two free masses start at rest on an
/// equilateral triangle of side r0 with the lower bob, plus position noise.
inline State sample_initial_conditions(const AnalyticSystem& sys, const SystemConfig& c, Rng& rng) {
  State s{Vec::Zero(static_cast<Eigen::Index>(sys.dof())), Vec::Zero(static_cast<Eigen::Index>(sys.dof())), 0.0};
  const std::size_t D = sys.dim;
  switch (sys.kind) {
    case SystemKind::pendulum: {
      std::vector<double> th(sys.n);
      for (auto& a : th) a = rng.uniform(-c.angle_range, c.angle_range);
      detail::place_chain(s, D, th, sys.lengths);
      break;
    }
    case SystemKind::spring: {
      const double R = ring_radius(sys.n, sys.r0);
      for (std::size_t i = 0; i < sys.n; ++i) {
        const double phi = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(sys.n);
        for (std::size_t d = 0; d < D; ++d) {
          double base = 0.0;
          if (d == 0) base = R * std::cos(phi);
          if (d == 1) base = R * std::sin(phi);
          s.q[static_cast<Eigen::Index>(i * D + d)] =
              base + rng.uniform(-c.position_noise * sys.r0, c.position_noise * sys.r0);
        }
      }
      for (Eigen::Index k = 0; k < s.qdot.size(); ++k)
        s.qdot[k] = rng.uniform(-c.velocity_range, c.velocity_range);
      break;
    }
    case SystemKind::hybrid: {
      std::vector<double> th(2);
      for (auto& a : th) a = rng.uniform(-c.angle_range, c.angle_range);
      detail::place_chain(s, D, th, sys.lengths);
      const double x1 = s.q[2], y1 = s.q[3];
      const double r = sys.r0;
      const double off[2][2] = {{r, 0.0}, {0.5 * r, -std::sqrt(3.0) / 2.0 * r}};
      for (std::size_t j = 0; j < 2; ++j) {
        s.q[static_cast<Eigen::Index>(4 + 2 * j)] =
            x1 + off[j][0] + rng.uniform(-c.position_noise * r, c.position_noise * r);
        s.q[static_cast<Eigen::Index>(5 + 2 * j)] =
            y1 + off[j][1] + rng.uniform(-c.position_noise * r, c.position_noise * r);
      }
      break;
    }
  }
  return s;
}

/// Acceleration function of an analytic or learned model under the
/// system's constraints and optional external forces.
inline AccelFn make_accel_fn(const DynamicsModel& model, ConstraintSpec spec,
                             std::vector<ForceWindow> forces = {}) {
  const std::size_t n = model.dof() / model.dim(), dim = model.dim();
  return [&model, spec = std::move(spec), forces = std::move(forces), n, dim](const State& s) {
    const Vec F = forces.empty() ? Vec::Zero(s.q.size()) : external_force(forces, n, dim, s.t);
    return solve_acceleration(model, spec, F, s).qddot;
  };
}

/// Records covering `horizon` seconds at one record every dt*stride, the
/// first at t = 0: floor(horizon / (dt*stride)), at least 1.
inline std::size_t records_for(double horizon, double dt, std::size_t stride) {
  if (!(horizon > 0.0) || !(dt > 0.0) || stride < 1)
    throw ValidationError("horizon, dt and stride must be positive");
  const double r = horizon / (dt * static_cast<double>(stride));
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(r + 1e-9)));
}

struct Sample {
  State state;
  Vec qddot;
  std::size_t trajectory = 0;
};

struct DatasetMeta {
  SystemConfig system;
  bool drag = false;
  double dt = 0.0;
  std::size_t stride = 0;
  std::uint64_t seed = 0;
  std::size_t trajectories = 0;
  std::size_t points = 0;
};

struct Dataset {
  DatasetMeta meta;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

/// n_traj rollouts of `points` records each, recorded every stride steps.
/// Trajectory t uses seed derive_seed(seed, t).
inline Dataset generate_dataset(const SystemConfig& cfg, std::size_t n_traj, std::size_t points,
                                bool drag, std::uint64_t seed) {
  if (n_traj < 1 || points < 1)
    throw ValidationError("generate_dataset: need at least one trajectory and one point");
  const AnalyticSystem sys = make_system(cfg, drag);
  const AnalyticModel model(sys);
  const AccelFn accel = make_accel_fn(model, sys.constraints());
  Dataset ds;
  ds.meta = {cfg, drag, cfg.step(), cfg.record_stride(), seed, n_traj, points};
  ds.samples.reserve(n_traj * points);
  for (std::size_t t = 0; t < n_traj; ++t) {
    const std::uint64_t tseed = derive_seed(seed, t);
    Rng rng(tseed);
    const State s0 = sample_initial_conditions(sys, cfg, rng);
    RolloutResult r;
    if (points == 1) {
      r.trajectory.states = {s0};
      try {
        r.trajectory.accels = {accel(s0)};
      } catch (const Error& e) {
        r.error = e.what();
      }
    } else {
      r = rollout(accel, s0, cfg.step(), (points - 1) * cfg.record_stride(), cfg.record_stride());
    }
    if (!r.ok())
      throw DatasetError("trajectory " + std::to_string(t) + " (seed " + std::to_string(tseed) +
                             ") failed: " + *r.error,
                         tseed);
    for (std::size_t k = 0; k < r.trajectory.size(); ++k)
      ds.samples.push_back({r.trajectory.states[k], r.trajectory.accels[k], t});
  }
  return ds;
}

/// Random disjoint split by sample; the first part gets round(ratio * N).
inline std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ValidationError("split_dataset: ratio must be in (0, 1)");
  const std::size_t N = ds.size();
  std::vector<std::size_t> idx(N);
  for (std::size_t i = 0; i < N; ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);
  auto n_first = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(N)));
  if (N >= 2) n_first = std::clamp<std::size_t>(n_first, 1, N - 1);
  std::pair<Dataset, Dataset> out{Dataset{ds.meta, {}}, Dataset{ds.meta, {}}};
  for (std::size_t k = 0; k < N; ++k)
    (k < n_first ? out.first : out.second).samples.push_back(ds.samples[idx[k]]);
  return out;
}

}  // namespace lgnn
