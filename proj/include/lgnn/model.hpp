#pragma once

// What the Euler-Lagrange solver needs from a Lagrangian: mass matrix,
// Coriolis-like term, conservative force and a dissipative force.

#include "lgnn/core.hpp"
#include "lgnn/diff.hpp"

#include <cstddef>
#include <span>

namespace lgnn {

/// M = d2L/dqdot2, C(a, b) = d/dq_b dL/dqdot_a, Pi = dL/dq.
struct ElTerms {
  Mat M;
  Mat C;
  Vec Pi;
};

class DynamicsModel {
 public:
  virtual ~DynamicsModel() = default;
  virtual std::size_t dof() const = 0;
  virtual std::size_t dim() const = 0;
  virtual ElTerms el_terms(const State& s) const = 0;
  /// Non-conservative generalised force (drag); zero unless overridden.
  virtual Vec drag(const State& s) const { return Vec::Zero(s.qdot.size()); }
};

/// A model with a flat, optimisable parameter vector.
class TrainableModel : public DynamicsModel {
 public:
  virtual Vec& parameters() = 0;
  virtual const Vec& parameters() const = 0;

  /// Adds weight * d/dtheta [u.(Pi - C qdot + Upsilon) - u.(M qddot)] to `grad`,
  /// holding u and qddot fixed. Together with the adjoint of the
  /// constrained solve this is the exact loss gradient.
  virtual void accumulate_parameter_gradient(const State& s, const Vec& u, const Vec& qddot,
                                             double weight, std::span<double> grad) const = 0;

  /// dV/dq of the learned potential.
  virtual Vec potential_gradient(const Vec& q) const = 0;
  /// True when the potential has a term on absolute position (gravity).
  virtual bool external_field() const = 0;
};

/// M, C and Pi of an arbitrary field through the generic derivative routines.
inline ElTerms el_terms(const ScalarField& lagrangian, const State& s) {
  return {hessian_qdot(lagrangian, s), mixed_qqdot(lagrangian, s), grad_q(lagrangian, s)};
}

/// Adapts any ScalarField to the solver, with optional linear drag -c*qdot.
class FieldModel : public DynamicsModel {
 public:
  FieldModel(const ScalarField& lagrangian, std::size_t dim, double drag_coefficient = 0.0)
      : field_(&lagrangian), dim_(dim), drag_(drag_coefficient) {}

  std::size_t dof() const override { return field_->dof(); }
  std::size_t dim() const override { return dim_; }
  ElTerms el_terms(const State& s) const override { return lgnn::el_terms(*field_, s); }
  Vec drag(const State& s) const override { return -drag_ * s.qdot; }

 private:
  const ScalarField* field_;
  std::size_t dim_;
  double drag_;
};

}  // namespace lgnn
