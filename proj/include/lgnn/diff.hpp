#pragma once

// Exact first and second derivatives of scalar energy functions of (q, qdot).
//
// A ScalarField evaluates its value together with the gradient with
// respect to q and qdot (a reverse pass written layer by layer for each
// model). Second derivatives come from running that same reverse pass in
// HyperDual arithmetic with one input direction seeded: the seeded
// component of the gradient is one column of the Hessian block.

#include "lgnn/core.hpp"
#include "lgnn/jet.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace lgnn {

template <class T>
struct FieldEval {
  T value{};
  std::vector<T> dq;
  std::vector<T> dqdot;
};

/// A twice-differentiable scalar f(q, qdot) with bound parameters.
class ScalarField {
 public:
  virtual ~ScalarField() = default;
  virtual std::size_t dof() const = 0;
  virtual FieldEval<double> evaluate(std::span<const double> q,
                                     std::span<const double> qdot) const = 0;
  virtual FieldEval<HyperDual> evaluate(std::span<const HyperDual> q,
                                        std::span<const HyperDual> qdot) const = 0;
};

/// CRTP helper: Derived implements
///   template <class T> FieldEval<T> eval(std::span<const T>, std::span<const T>) const;
template <class Derived>
class ScalarFieldBase : public ScalarField {
 public:
  FieldEval<double> evaluate(std::span<const double> q,
                             std::span<const double> qdot) const override {
    return static_cast<const Derived&>(*this).template eval<double>(q, qdot);
  }
  FieldEval<HyperDual> evaluate(std::span<const HyperDual> q,
                                std::span<const HyperDual> qdot) const override {
    return static_cast<const Derived&>(*this).template eval<HyperDual>(q, qdot);
  }
};

namespace detail {

inline std::span<const double> as_span(const Vec& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

inline void check_dof(const ScalarField& f, const State& s) {
  validate_state(s, f.dof());
}

inline Vec to_vec(const std::vector<double>& xs, const char* what) {
  Vec v = Eigen::Map<const Vec>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  require_finite(v, what);
  return v;
}

inline std::vector<HyperDual> lift(const Vec& v) {
  std::vector<HyperDual> out(static_cast<std::size_t>(v.size()));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = HyperDual{v[static_cast<Eigen::Index>(i)]};
  return out;
}

}  // namespace detail

inline double field_value(const ScalarField& f, const State& s) {
  detail::check_dof(f, s);
  const double v = f.evaluate(detail::as_span(s.q), detail::as_span(s.qdot)).value;
  if (!std::isfinite(v)) throw NumericError("field value is not finite");
  return v;
}

inline Vec grad_q(const ScalarField& f, const State& s) {
  detail::check_dof(f, s);
  return detail::to_vec(f.evaluate(detail::as_span(s.q), detail::as_span(s.qdot)).dq, "grad_q");
}

inline Vec grad_qdot(const ScalarField& f, const State& s) {
  detail::check_dof(f, s);
  return detail::to_vec(f.evaluate(detail::as_span(s.q), detail::as_span(s.qdot)).dqdot,
                        "grad_qdot");
}

/// Largest |H - H^T| entry tolerated before symmetrisation, relative to max|H|.
inline constexpr double kHessianAsymmetryTol = 1e-10;

namespace detail {

// Column k of d/d(seeded) of d f / d(qdot), seeding either q or qdot.
inline Mat second_derivative_columns(const ScalarField& f, const State& s, bool seed_q) {
  const std::size_t n = f.dof();
  Mat out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  auto q = lift(s.q);
  auto qd = lift(s.qdot);
  for (std::size_t k = 0; k < n; ++k) {
    auto& seeded = seed_q ? q : qd;
    seeded[k].a = 1.0;
    const auto ev = f.evaluate(std::span<const HyperDual>(q), std::span<const HyperDual>(qd));
    seeded[k].a = 0.0;
    for (std::size_t r = 0; r < n; ++r)
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = ev.dqdot[r].a;
  }
  require_finite(out, seed_q ? "mixed_qqdot" : "hessian_qdot");
  return out;
}

}  // namespace detail

/// M = d2 f / d qdot^2, symmetrised.
inline Mat hessian_qdot(const ScalarField& f, const State& s) {
  detail::check_dof(f, s);
  Mat h = detail::second_derivative_columns(f, s, /*seed_q=*/false);
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  const double asym = (h - h.transpose()).cwiseAbs().maxCoeff();
  if (asym > kHessianAsymmetryTol * scale)
    throw NumericError("hessian_qdot: asymmetry " + std::to_string(asym) + " exceeds tolerance");
  return 0.5 * (h + h.transpose());
}

/// C with C(a, b) = d/dq_b (d f / d qdot_a).
inline Mat mixed_qqdot(const ScalarField& f, const State& s) {
  detail::check_dof(f, s);
  return detail::second_derivative_columns(f, s, /*seed_q=*/true);
}

/// Central-difference estimates of (grad_q, grad_qdot) from values only.
inline std::pair<Vec, Vec> fd_oracle(const ScalarField& f, const State& s, double h = 1e-6) {
  if (!(h > 0.0)) throw ValidationError("fd_oracle: step must be positive");
  detail::check_dof(f, s);
  const auto n = static_cast<Eigen::Index>(f.dof());
  auto value = [&](const Vec& q, const Vec& qd) {
    return f.evaluate(detail::as_span(q), detail::as_span(qd)).value;
  };
  Vec gq(n), gqd(n);
  Vec q = s.q, qd = s.qdot;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double q0 = q[k];
    q[k] = q0 + h;
    const double fp = value(q, qd);
    q[k] = q0 - h;
    const double fm = value(q, qd);
    q[k] = q0;
    gq[k] = (fp - fm) / (2.0 * h);

    const double v0 = qd[k];
    qd[k] = v0 + h;
    const double gp = value(q, qd);
    qd[k] = v0 - h;
    const double gm = value(q, qd);
    qd[k] = v0;
    gqd[k] = (gp - gm) / (2.0 * h);
  }
  return {gq, gqd};
}

}  // namespace lgnn
