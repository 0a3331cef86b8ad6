#pragma once

// Ground-truth Lagrangians of the pendulum, spring and hybrid systems.
//
// L = sum_i 1/2 m_i |qdot_i|^2 - sum_{i in gravity} m_i g y_i
//     - sum_{springs} 1/2 k (|q_i - q_j| - r0)^2

#include "lgnn/constraints.hpp"
#include "lgnn/diff.hpp"
#include "lgnn/graph.hpp"
#include "lgnn/model.hpp"

#include <string>
#include <vector>

namespace lgnn {

enum class SystemKind { pendulum, spring, hybrid };

inline std::string to_string(SystemKind k) {
  switch (k) {
    case SystemKind::pendulum: return "pendulum";
    case SystemKind::spring: return "spring";
    case SystemKind::hybrid: return "hybrid";
  }
  return "?";
}

inline SystemKind parse_system_kind(const std::string& s) {
  if (s == "pendulum") return SystemKind::pendulum;
  if (s == "spring") return SystemKind::spring;
  if (s == "hybrid") return SystemKind::hybrid;
  throw ValidationError("unknown system kind '" + s + "' (expected pendulum, spring or hybrid)");
}

struct AnalyticSystem {
  SystemKind kind = SystemKind::spring;
  std::size_t n = 0;
  std::size_t dim = 2;
  std::vector<double> masses;
  double g = 9.81;
  double k = 1.0;
  double r0 = 1.0;
  std::vector<double> lengths;  // one per bar
  std::vector<Bar> bars;
  std::vector<Edge> springs;
  std::vector<bool> gravity;  // per particle; gravity acts along axis 1
  std::vector<int> node_types;
  double drag = 0.0;  // linear drag force -drag * qdot per particle

  std::size_t dof() const { return n * dim; }
  bool has_gravity() const {
    for (bool b : gravity)
      if (b) return true;
    return false;
  }

  void validate() const {
    if (n < 1) throw ValidationError("system: n must be at least 1");
    if (dim < 1) throw ValidationError("system: dim must be at least 1");
    if (masses.size() != n) throw ValidationError("system: expected one mass per particle");
    if (gravity.size() != n) throw ValidationError("system: expected one gravity flag per particle");
    if (node_types.size() != n) throw ValidationError("system: expected one node type per particle");
    for (double m : masses)
      if (!(m > 0.0)) throw ValidationError("system: masses must be positive");
    if (!(g > 0.0) || !(k > 0.0) || !(r0 > 0.0))
      throw ValidationError("system: g, k and r0 must be positive");
    if (has_gravity() && dim < 2) throw ValidationError("system: gravity needs dim >= 2");
    if (drag < 0.0) throw ValidationError("system: drag coefficient must be non-negative");
    if (lengths.size() != bars.size()) throw ValidationError("system: expected one length per bar");
    for (const auto& s : springs)
      if (s.i >= n || s.j >= n || s.i == s.j)
        throw ValidationError("system: spring (" + std::to_string(s.i) + ", " +
                              std::to_string(s.j) + ") is invalid");
  }

  ConstraintSpec constraints() const { return bars.empty() ? no_constraints(dof()) : bar_constraints(bars, n, dim); }

  /// Interaction graph: one edge per bar between particles and per spring.
  SystemGraph graph() const {
    SystemSpec spec;
    spec.topology = Topology::explicit_edges;
    spec.n = n;
    spec.dim = dim;
    spec.node_types = node_types;
    for (const auto& b : bars)
      if (b.parent) spec.edges.push_back({*b.parent, b.child});
    for (const auto& s : springs) spec.edges.push_back(s);
    return build_system_graph(spec);
  }
};

/// n bobs hanging from the origin, joined by bars of length `length`.
inline AnalyticSystem make_pendulum(std::size_t n, double mass = 1.0, double length = 1.0,
                                    double g = 9.81, std::size_t dim = 2) {
  AnalyticSystem s;
  s.kind = SystemKind::pendulum;
  s.n = n;
  s.dim = dim;
  s.masses.assign(n, mass);
  s.g = g;
  s.lengths.assign(n, length);
  s.bars = pendulum_bars(n, s.lengths);
  s.gravity.assign(n, true);
  s.node_types.assign(n, 0);
  s.validate();
  return s;
}

/// n masses on a closed ring of springs (i, i+1 mod n).
inline AnalyticSystem make_spring(std::size_t n, double mass = 1.0, double k = 1.0, double r0 = 1.0,
                                  std::size_t dim = 2) {
  AnalyticSystem s;
  s.kind = SystemKind::spring;
  s.n = n;
  s.dim = dim;
  s.masses.assign(n, mass);
  s.k = k;
  s.r0 = r0;
  SystemSpec spec{Topology::ring, n, dim, {}, 0, {}};
  s.springs = build_system_graph(spec).edges;
  s.gravity.assign(n, false);
  s.node_types.assign(n, 0);
  s.validate();
  return s;
}

/// Double pendulum (bobs 0, 1, type 0, under gravity) carrying two free
/// masses (2, 3, type 1) on four springs: (1,2), (2,3), (1,3), (0,2).
inline AnalyticSystem make_hybrid(double mass = 1.0, double length = 1.0, double k = 1.0,
                                  double r0 = 1.0, double g = 9.81) {
  AnalyticSystem s;
  s.kind = SystemKind::hybrid;
  s.n = 4;
  s.dim = 2;
  s.masses.assign(4, mass);
  s.g = g;
  s.k = k;
  s.r0 = r0;
  s.lengths.assign(2, length);
  s.bars = pendulum_bars(2, s.lengths);
  s.springs = {{1, 2}, {2, 3}, {1, 3}, {0, 2}};
  s.gravity = {true, true, false, false};
  s.node_types = {0, 0, 1, 1};
  s.validate();
  return s;
}

/// Analytic Lagrangian as a differentiable field and as a solver model.
class AnalyticModel final : public ScalarFieldBase<AnalyticModel>, public DynamicsModel {
 public:
  explicit AnalyticModel(AnalyticSystem system) : sys_(std::move(system)) { sys_.validate(); }

  const AnalyticSystem& system() const { return sys_; }
  std::size_t dof() const override { return sys_.dof(); }
  std::size_t dim() const override { return sys_.dim; }

  template <class T>
  FieldEval<T> eval(std::span<const T> q, std::span<const T> qdot) const {
    const std::size_t D = sys_.dim;
    FieldEval<T> out;
    out.dq.assign(dof(), T{});
    out.dqdot.assign(dof(), T{});
    T L{};
    for (std::size_t i = 0; i < sys_.n; ++i) {
      const double m = sys_.masses[i];
      for (std::size_t d = 0; d < D; ++d) {
        const T& v = qdot[i * D + d];
        L += 0.5 * m * (v * v);
        out.dqdot[i * D + d] = m * v;
      }
      if (sys_.gravity[i]) {
        L -= m * sys_.g * q[i * D + 1];
        out.dq[i * D + 1] -= T{m * sys_.g};
      }
    }
    for (const auto& s : sys_.springs) {
      T r2{};
      for (std::size_t d = 0; d < D; ++d) {
        const T diff = q[s.i * D + d] - q[s.j * D + d];
        r2 += diff * diff;
      }
      const T r = sqrt_(r2);
      const T ext = r - sys_.r0;
      L -= 0.5 * sys_.k * (ext * ext);
      const T coef = sys_.k * ext / r;  // dV/dq_i = coef * (q_i - q_j)
      for (std::size_t d = 0; d < D; ++d) {
        const T f = coef * (q[s.i * D + d] - q[s.j * D + d]);
        out.dq[s.i * D + d] -= f;
        out.dq[s.j * D + d] += f;
      }
    }
    out.value = L;
    return out;
  }

  /// M diagonal, C zero, Pi = -dV/dq; cheaper than the generic route.
  ElTerms el_terms(const State& s) const override {
    validate_state(s, dof());
    ElTerms t;
    const auto N = static_cast<Eigen::Index>(dof());
    t.M = Mat::Zero(N, N);
    for (std::size_t i = 0; i < sys_.n; ++i)
      for (std::size_t d = 0; d < sys_.dim; ++d) {
        const auto r = static_cast<Eigen::Index>(i * sys_.dim + d);
        t.M(r, r) = sys_.masses[i];
      }
    t.C = Mat::Zero(N, N);
    t.Pi = grad_q(*this, s);
    return t;
  }

  Vec drag(const State& s) const override { return -sys_.drag * s.qdot; }

  double kinetic(const State& s) const {
    double T = 0.0;
    for (std::size_t i = 0; i < sys_.n; ++i)
      T += 0.5 * sys_.masses[i] *
           s.qdot.segment(static_cast<Eigen::Index>(i * sys_.dim), static_cast<Eigen::Index>(sys_.dim))
               .squaredNorm();
    return T;
  }

  double lagrangian(const State& s) const { return field_value(*this, s); }
  /// Total energy T + V.
  double hamiltonian(const State& s) const { return 2.0 * kinetic(s) - lagrangian(s); }

 private:
  static double sqrt_(double x) { return std::sqrt(x); }
  static HyperDual sqrt_(const HyperDual& x) { return sqrt(x); }

  AnalyticSystem sys_;
};

inline double analytic_lagrangian(const AnalyticSystem& system, const State& s) {
  return AnalyticModel(system).lagrangian(s);
}

}  // namespace lgnn
