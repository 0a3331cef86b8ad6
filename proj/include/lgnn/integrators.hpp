#pragma once

// Velocity Verlet with a velocity predictor for velocity-dependent forces.

#include "lgnn/core.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace lgnn {

using AccelFn = std::function<Vec(const State&)>;

struct Trajectory {
  std::vector<State> states;
  std::vector<Vec> accels;
  double dt = 0.0;
  std::size_t stride = 1;

  std::size_t size() const { return states.size(); }
};

/// a0 = a(q, qdot); q' = q + dt qdot + dt^2/2 a0;
/// a1 = a(q', qdot + dt a0); qdot' = qdot + dt/2 (a0 + a1).
/// `a0` may be passed in when a(q, qdot) is already known.
inline State verlet_step(const AccelFn& accel, const State& s, double dt, long step_index = -1,
                         const Vec* a0_known = nullptr) {
  if (!(dt > 0.0)) throw ValidationError("verlet_step: dt must be positive");
  const Vec a0 = a0_known ? *a0_known : accel(s);
  State next;
  next.t = s.t + dt;
  next.q = s.q + dt * s.qdot + (0.5 * dt * dt) * a0;
  next.qdot = s.qdot + dt * a0;
  const Vec a1 = accel(next);
  next.qdot = s.qdot + (0.5 * dt) * (a0 + a1);
  if (first_non_finite(next.q) >= 0 || first_non_finite(next.qdot) >= 0)
    throw NumericError("verlet_step: non-finite state at step " + std::to_string(step_index),
                       step_index);
  return next;
}

struct RolloutResult {
  Trajectory trajectory;
  std::optional<std::string> error;
  long failed_step = -1;

  bool ok() const { return !error.has_value(); }
};

/// Records the initial state and every `stride`-th step after it
/// (n_steps / stride + 1 records). `post_step` may adjust each new state.
/// On failure returns the recorded prefix with the error message.
inline RolloutResult rollout(const AccelFn& accel, const State& s0, double dt, std::size_t n_steps,
                             std::size_t stride,
                             const std::function<void(State&)>& post_step = {}) {
  if (n_steps < 1) throw ValidationError("rollout: n_steps must be at least 1");
  if (stride < 1) throw ValidationError("rollout: stride must be at least 1");
  if (!(dt > 0.0)) throw ValidationError("rollout: dt must be positive");
  RolloutResult res;
  res.trajectory.dt = dt;
  res.trajectory.stride = stride;
  res.trajectory.states.reserve(n_steps / stride + 1);
  res.trajectory.accels.reserve(n_steps / stride + 1);

  State s = s0;
  std::size_t step = 0;
  try {
    require_finite(s, "rollout initial state");
    Vec a = accel(s);
    require_finite(a, "rollout initial acceleration");
    res.trajectory.states.push_back(s);
    res.trajectory.accels.push_back(a);
    // a is always a(s) at the corrected velocity, so recorded accelerations
    // equal a fresh evaluation at the recorded state.
    for (step = 1; step <= n_steps; ++step) {
      State next = verlet_step(accel, s, dt, static_cast<long>(step), &a);
      if (post_step) post_step(next);
      s = std::move(next);
      a = accel(s);
      if (step % stride == 0) {
        res.trajectory.states.push_back(s);
        res.trajectory.accels.push_back(a);
      }
    }
  } catch (const Error& e) {
    res.error = e.what();
    res.failed_step = static_cast<long>(step);
  }
  return res;
}

}  // namespace lgnn
