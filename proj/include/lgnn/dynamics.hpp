#pragma once

// Constrained Euler-Lagrange solve for accelerations.
//
//   f      = Pi - C qdot + Upsilon + F
//   lambda = (A M^-1 A^T)^-1 (A M^-1 f + Adot qdot)
//   qddot  = M^-1 (f - A^T lambda)
//
// The same factorisation solves the adjoint system used in training
// (constraint right-hand side zero).

#include "lgnn/constraints.hpp"
#include "lgnn/model.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace lgnn {

/// Ridge added to A M^-1 A^T when its condition estimate exceeds kRidgeCondition.
inline constexpr double kRidge = 1e-9;
inline constexpr double kRidgeCondition = 1e12;
/// Tolerance on |A qddot + Adot qdot|_inf, relative to the magnitudes involved.
inline constexpr double kConstraintTol = 1e-9;

struct DynamicsSolution {
  Vec qddot;
  Vec lambda;
  Mat M;
  Mat C;
  Vec Pi;
  Vec Upsilon;
  Vec F_ext;
  double constraint_residual = 0.0;
  bool regularized = false;
};

/// Factorisation of M and of S = A M^-1 A^T for repeated solves.
class KktSolver {
 public:
  /// `block` is the particle dimension; M is factored per block when it has
  /// no coupling between particles.
  KktSolver(const Mat& M, const Mat& A, std::size_t block) : A_(A) {
    const auto N = M.rows();
    if (M.cols() != N) throw ValidationError("solver: mass matrix is not square");
    if (A.rows() > 0 && A.cols() != N)
      throw ValidationError("solver: constraint matrix has " + std::to_string(A.cols()) +
                            " columns, expected " + std::to_string(N));
    require_finite(M, "mass matrix");
    require_finite(A, "constraint matrix");

    block_ = block > 0 && N % static_cast<Eigen::Index>(block) == 0 && is_block_diagonal(M, block)
                 ? static_cast<Eigen::Index>(block)
                 : 0;
    if (block_) {
      const Eigen::Index nb = N / block_;
      inv_blocks_.resize(static_cast<std::size_t>(nb));
      for (Eigen::Index b = 0; b < nb; ++b) {
        const Mat blk = M.block(b * block_, b * block_, block_, block_);
        Eigen::LDLT<Mat> f(blk);
        if (f.info() != Eigen::Success || !(f.rcond() > 0.0))
          throw SolverError("solver: mass matrix block " + std::to_string(b) + " is singular");
        inv_blocks_[static_cast<std::size_t>(b)] = f.solve(Mat::Identity(block_, block_));
      }
    } else {
      ldlt_M_.compute(M);
      if (ldlt_M_.info() != Eigen::Success || !(ldlt_M_.rcond() > 0.0))
        throw SolverError("solver: mass matrix is singular");
    }

    if (A_.rows() == 0) return;
    MinvAt_ = solve_M(Mat(A_.transpose()));
    Mat S = A_ * MinvAt_;
    S = 0.5 * (S + S.transpose());
    ldlt_S_.compute(S);
    if (!(condition(ldlt_S_) <= kRidgeCondition)) {
      regularized_ = true;
      S.diagonal().array() += kRidge;
      ldlt_S_.compute(S);
      if (!(condition(ldlt_S_) < 1.0 / std::numeric_limits<double>::epsilon()))
        throw SolverError("solver: constraint system singular; offending rows " +
                          offending_rows(S));
    }
  }

  bool regularized() const { return regularized_; }
  std::size_t rows() const { return static_cast<std::size_t>(A_.rows()); }

  Vec solve_M(const Vec& v) const {
    if (!block_) return ldlt_M_.solve(v);
    Vec out(v.size());
    for (std::size_t b = 0; b < inv_blocks_.size(); ++b) {
      const auto o = static_cast<Eigen::Index>(b) * block_;
      out.segment(o, block_).noalias() = inv_blocks_[b] * v.segment(o, block_);
    }
    return out;
  }

  Mat solve_M(const Mat& m) const {
    if (!block_) return ldlt_M_.solve(m);
    Mat out(m.rows(), m.cols());
    for (std::size_t b = 0; b < inv_blocks_.size(); ++b) {
      const auto o = static_cast<Eigen::Index>(b) * block_;
      out.middleRows(o, block_).noalias() = inv_blocks_[b] * m.middleRows(o, block_);
    }
    return out;
  }

  /// Solves M x + A^T lambda = f, A x = -c. Returns x; lambda in `lambda`.
  /// One refinement pass on the constraint rows keeps A x + c at roundoff.
  Vec solve(const Vec& f, const Vec& c, Vec& lambda) const {
    Vec x = solve_M(f);
    if (A_.rows() == 0) {
      lambda.resize(0);
      return x;
    }
    lambda = ldlt_S_.solve(A_ * x + c);
    x.noalias() -= MinvAt_ * lambda;
    const Vec r = A_ * x + c;
    const Vec dl = ldlt_S_.solve(r);
    lambda += dl;
    x.noalias() -= MinvAt_ * dl;
    return x;
  }

 private:
  // max(1/rcond, max|D|/min|D|); the pivot ratio catches exact zero pivots
  // that the rcond estimate misses.
  static double condition(const Eigen::LDLT<Mat>& f) {
    if (f.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    const Vec d = f.vectorD().cwiseAbs();
    if (d.size() == 0) return 1.0;
    const double lo = d.minCoeff();
    if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
    const double rc = f.rcond();
    return std::max(rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity(), d.maxCoeff() / lo);
  }

  static bool is_block_diagonal(const Mat& M, std::size_t block) {
    const auto b = static_cast<Eigen::Index>(block);
    for (Eigen::Index c = 0; c < M.cols(); ++c)
      for (Eigen::Index r = 0; r < M.rows(); ++r)
        if (r / b != c / b && M(r, c) != 0.0) return false;
    return true;
  }

  std::string offending_rows(const Mat& S) const {
    std::string rows;
    const double scale = std::max(1.0, S.diagonal().cwiseAbs().maxCoeff());
    for (Eigen::Index r = 0; r < A_.rows(); ++r)
      if (A_.row(r).norm() <= 1e-12 * scale || std::abs(S(r, r)) <= 1e-12 * scale)
        rows += (rows.empty() ? "" : ", ") + std::to_string(r);
    return rows.empty() ? "(linearly dependent rows)" : rows;
  }

  Mat A_;
  Eigen::Index block_ = 0;
  std::vector<Mat> inv_blocks_;
  Eigen::LDLT<Mat> ldlt_M_;
  Mat MinvAt_;
  Eigen::LDLT<Mat> ldlt_S_;
  bool regularized_ = false;
};

/// Solves for qddot from precomputed Euler-Lagrange terms.
inline DynamicsSolution solve_acceleration(ElTerms terms, const Vec& upsilon, const Vec& F,
                                           const Mat& A, const Mat& Adot, const Vec& qdot,
                                           std::size_t block) {
  const auto N = terms.M.rows();
  if (terms.Pi.size() != N || qdot.size() != N || upsilon.size() != N || F.size() != N)
    throw ValidationError("solve_acceleration: inconsistent vector lengths");
  require_finite(terms.Pi, "conservative force");
  require_finite(upsilon, "drag force");
  require_finite(F, "external force");

  DynamicsSolution sol;
  Vec f = terms.Pi + upsilon + F;
  if (terms.C.size()) f.noalias() -= terms.C * qdot;
  const Vec c = A.rows() ? Vec(Adot * qdot) : Vec();

  KktSolver kkt(terms.M, A, block);
  sol.qddot = kkt.solve(f, c, sol.lambda);
  if (long i = first_non_finite(sol.qddot); i >= 0)
    throw NumericError("solve_acceleration: non-finite acceleration at coordinate " +
                       std::to_string(i), i);
  sol.regularized = kkt.regularized();
  if (A.rows()) {
    const Vec r = A * sol.qddot + c;
    sol.constraint_residual = r.cwiseAbs().maxCoeff();
    const double scale = 1.0 + c.cwiseAbs().maxCoeff() +
                         (A.cwiseAbs() * sol.qddot.cwiseAbs()).maxCoeff();
    if (!(sol.constraint_residual <= kConstraintTol * scale)) {
      Eigen::Index row = 0;
      r.cwiseAbs().maxCoeff(&row);
      throw SolverError("solve_acceleration: constraint residual " +
                        std::to_string(sol.constraint_residual) + " at row " + std::to_string(row));
    }
  }
  sol.M = std::move(terms.M);
  sol.C = std::move(terms.C);
  sol.Pi = std::move(terms.Pi);
  sol.Upsilon = upsilon;
  sol.F_ext = F;
  return sol;
}

inline DynamicsSolution solve_acceleration(const DynamicsModel& model, const ConstraintSpec& spec,
                                           const Vec& F, const State& s) {
  validate_state(s, model.dof());
  if (spec.dof != model.dof())
    throw ValidationError("solve_acceleration: constraint spec is for " + std::to_string(spec.dof) +
                          " coordinates, model has " + std::to_string(model.dof()));
  const Vec force = F.size() ? F : Vec(Vec::Zero(s.q.size()));
  return solve_acceleration(model.el_terms(s), model.drag(s), force, spec.A(s.q),
                            spec.Adot(s.q, s.qdot), s.qdot, model.dim());
}

/// Constant force on one coordinate of one particle during [t_start, t_end).
struct ForceWindow {
  std::size_t particle = 0;
  std::size_t axis = 0;
  double magnitude = 0.0;
  double t_start = 0.0;
  double t_end = std::numeric_limits<double>::infinity();
};

inline Vec external_force(const std::vector<ForceWindow>& windows, std::size_t n, std::size_t dim,
                          double t) {
  Vec F = Vec::Zero(static_cast<Eigen::Index>(n * dim));
  for (const auto& w : windows) {
    if (w.particle >= n)
      throw ValidationError("external force: particle " + std::to_string(w.particle) +
                            " out of range [0, " + std::to_string(n) + ")");
    if (w.axis >= dim)
      throw ValidationError("external force: axis " + std::to_string(w.axis) + " out of range");
    if (t >= w.t_start && t < w.t_end) F[static_cast<Eigen::Index>(w.particle * dim + w.axis)] += w.magnitude;
  }
  return F;
}

}  // namespace lgnn
