#pragma once

// Pfaffian velocity constraints A(q) qdot = 0 from rigid bars.

#include "lgnn/core.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace lgnn {

/// Rigid bar |q_child - q_parent| = length. No parent means the bar is
/// pinned to the fixed origin.
struct Bar {
  std::size_t child = 0;
  std::optional<std::size_t> parent;
  double length = 1.0;
};

struct ConstraintSpec {
  std::size_t k = 0;
  std::size_t dof = 0;
  std::function<Mat(const Vec& q)> eval_A;
  std::function<Mat(const Vec& q, const Vec& qdot)> eval_Adot;
  std::string description;

  Mat A(const Vec& q) const { return k ? eval_A(q) : Mat(0, static_cast<Eigen::Index>(dof)); }
  Mat Adot(const Vec& q, const Vec& qdot) const {
    return k ? eval_Adot(q, qdot) : Mat(0, static_cast<Eigen::Index>(dof));
  }
};

inline ConstraintSpec no_constraints(std::size_t dof) {
  ConstraintSpec c;
  c.dof = dof;
  c.description = "unconstrained";
  return c;
}

namespace detail {

// Row r of the bar Jacobian built from per-particle vectors `v` (positions
// for A, velocities for Adot): +(v_c - v_p) on the child, -(v_c - v_p) on
// the parent.
inline Mat bar_rows(const std::vector<Bar>& bars, std::size_t n, std::size_t dim, const Vec& v) {
  const auto D = static_cast<Eigen::Index>(dim);
  Mat out = Mat::Zero(static_cast<Eigen::Index>(bars.size()), static_cast<Eigen::Index>(n * dim));
  for (std::size_t r = 0; r < bars.size(); ++r) {
    const auto& b = bars[r];
    const auto c = static_cast<Eigen::Index>(b.child * dim);
    Vec rel = v.segment(c, D);
    if (b.parent) rel -= v.segment(static_cast<Eigen::Index>(*b.parent * dim), D);
    out.block(static_cast<Eigen::Index>(r), c, 1, D) = rel.transpose();
    if (b.parent)
      out.block(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(*b.parent * dim), 1, D) =
          -rel.transpose();
  }
  return out;
}

}  // namespace detail

/// Row r is d/dt (|q_c - q_p|^2 / 2) = (q_c - q_p).(qdot_c - qdot_p).
inline ConstraintSpec bar_constraints(std::vector<Bar> bars, std::size_t n, std::size_t dim) {
  for (const auto& b : bars) {
    if (b.child >= n || (b.parent && *b.parent >= n))
      throw ValidationError("bar references a particle outside [0, " + std::to_string(n) + ")");
    if (b.parent && *b.parent == b.child) throw ValidationError("bar connects a particle to itself");
    if (!(b.length > 0.0)) throw ValidationError("bar length must be positive");
  }
  ConstraintSpec c;
  c.k = bars.size();
  c.dof = n * dim;
  c.eval_A = [bars, n, dim](const Vec& q) { return detail::bar_rows(bars, n, dim, q); };
  c.eval_Adot = [bars, n, dim](const Vec&, const Vec& qdot) {
    return detail::bar_rows(bars, n, dim, qdot);
  };
  c.description = std::to_string(bars.size()) + " rigid bar(s)";
  return c;
}

/// Chain of n bobs hanging from the origin: bar 0 pins bob 0, bar i links i-1 and i.
inline std::vector<Bar> pendulum_bars(std::size_t n, const std::vector<double>& lengths) {
  if (n < 1) throw ValidationError("pendulum: n must be at least 1");
  if (lengths.size() != n)
    throw ValidationError("pendulum: expected " + std::to_string(n) + " bar lengths");
  std::vector<Bar> bars;
  for (std::size_t i = 0; i < n; ++i)
    bars.push_back({i, i == 0 ? std::nullopt : std::optional<std::size_t>(i - 1), lengths[i]});
  return bars;
}

inline ConstraintSpec pendulum_constraints(std::size_t n, const std::vector<double>& lengths,
                                           std::size_t dim = 2) {
  return bar_constraints(pendulum_bars(n, lengths), n, dim);
}

inline Vec pfaffian_residual(const ConstraintSpec& spec, const State& s) {
  return spec.A(s.q) * s.qdot;
}

/// Max |FD(d/dt A(q)) qdot - Adot(q, qdot) qdot| with a central step along qdot.
inline double constraint_consistency_check(const ConstraintSpec& spec, const State& s,
                                           double h = 1e-6) {
  if (!(h > 0.0)) throw ValidationError("consistency check: step must be positive");
  if (spec.k == 0) return 0.0;
  const Mat dA = (spec.A(s.q + h * s.qdot) - spec.A(s.q - h * s.qdot)) / (2.0 * h);
  return (dA * s.qdot - spec.Adot(s.q, s.qdot) * s.qdot).cwiseAbs().maxCoeff();
}

/// max over bars of | |q_c - q_p| - length |.
inline double max_bar_length_error(const std::vector<Bar>& bars, std::size_t dim, const Vec& q) {
  const auto D = static_cast<Eigen::Index>(dim);
  double worst = 0.0;
  for (const auto& b : bars) {
    Vec rel = q.segment(static_cast<Eigen::Index>(b.child * dim), D);
    if (b.parent) rel -= q.segment(static_cast<Eigen::Index>(*b.parent * dim), D);
    worst = std::max(worst, std::abs(rel.norm() - b.length));
  }
  return worst;
}

/// Restores bar lengths and removes relative radial velocity, walking the
/// bars in order (parents before children for chains).
inline void project_onto_bars(const std::vector<Bar>& bars, std::size_t dim, State& s) {
  const auto D = static_cast<Eigen::Index>(dim);
  for (const auto& b : bars) {
    const auto c = static_cast<Eigen::Index>(b.child * dim);
    Vec base = Vec::Zero(D), base_v = Vec::Zero(D);
    if (b.parent) {
      base = s.q.segment(static_cast<Eigen::Index>(*b.parent * dim), D);
      base_v = s.qdot.segment(static_cast<Eigen::Index>(*b.parent * dim), D);
    }
    Vec rel = s.q.segment(c, D) - base;
    const double len = rel.norm();
    if (len == 0.0) continue;
    const Vec e = rel / len;
    s.q.segment(c, D) = base + b.length * e;
    const Vec rel_v = s.qdot.segment(c, D) - base_v;
    s.qdot.segment(c, D) -= rel_v.dot(e) * e;
  }
}

}  // namespace lgnn
