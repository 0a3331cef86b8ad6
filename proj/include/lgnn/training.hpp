#pragma once

// Supervised training on acceleration labels.
//
// The prediction qddot solves the constrained Euler-Lagrange system
//   [M A^T; A 0] [qddot; lambda] = [Pi + Upsilon; -Adot qdot],
// so for a loss l(qddot) the parameter gradient is
//   dl/dtheta = d/dtheta [u^T (Pi + Upsilon - M qddot)]   (qddot, lambda held fixed)
// with the adjoint [M A^T; A 0] [u; mu] = [dl/dqddot; 0]. The model
// supplies the bracket's parameter derivative.

#include "lgnn/datagen.hpp"
#include "lgnn/dynamics.hpp"
#include "lgnn/model.hpp"
#include "lgnn/rng.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace lgnn {

enum class LossKind { l2, l1 };

inline std::string to_string(LossKind k) { return k == LossKind::l2 ? "l2" : "l1"; }

inline LossKind parse_loss_kind(const std::string& s) {
  if (s == "l2" || s == "mse") return LossKind::l2;
  if (s == "l1" || s == "mae") return LossKind::l1;
  throw ValidationError("unknown loss '" + s + "' (expected l2 or l1)");
}

/// Mean over all coordinates of the squared (l2) or absolute (l1) error.
inline double sample_loss(const Vec& pred, const Vec& target, LossKind kind) {
  if (pred.size() != target.size() || pred.size() == 0)
    throw ValidationError("loss: prediction and target lengths differ");
  const Vec d = pred - target;
  return kind == LossKind::l2 ? d.squaredNorm() / static_cast<double>(d.size())
                              : d.cwiseAbs().sum() / static_cast<double>(d.size());
}

inline Vec sample_loss_gradient(const Vec& pred, const Vec& target, LossKind kind) {
  const Vec d = pred - target;
  const double inv = 1.0 / static_cast<double>(d.size());
  if (kind == LossKind::l2) return 2.0 * inv * d;
  return inv * d.unaryExpr([](double x) { return static_cast<double>((x > 0) - (x < 0)); });
}

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Vec m;
  Vec v;
  std::uint64_t t = 0;
};

/// One bias-corrected Adam update in place.
inline void adam_step(Vec& params, const Vec& grad, AdamState& st, const AdamConfig& c = {}) {
  if (grad.size() != params.size()) throw ValidationError("adam: gradient length mismatch");
  if (st.m.size() != params.size()) {
    st.m = Vec::Zero(params.size());
    st.v = Vec::Zero(params.size());
    st.t = 0;
  }
  ++st.t;
  st.m = c.beta1 * st.m + (1.0 - c.beta1) * grad;
  st.v = c.beta2 * st.v + (1.0 - c.beta2) * grad.cwiseProduct(grad);
  const double b1 = 1.0 - std::pow(c.beta1, static_cast<double>(st.t));
  const double b2 = 1.0 - std::pow(c.beta2, static_cast<double>(st.t));
  params.array() -= c.lr * (st.m.array() / b1) / ((st.v.array() / b2).sqrt() + c.eps);
}

struct TrainConfig {
  AdamConfig adam;
  std::size_t batch = 100;
  std::size_t epochs = 10000;
  std::size_t patience = 500;  // epochs without a new best validation loss
  LossKind loss = LossKind::l2;
  std::uint64_t seed = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainReport {
  std::vector<double> train_loss;  // per epoch; entry 0 is before any update
  std::vector<double> val_loss;
  std::size_t best_epoch = 0;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t epochs_run = 0;
  bool early_stopped = false;
  double seconds = 0.0;
  AdamState adam;
  Vec best_params;
};

/// Mean sample loss of the model's constrained predictions over `ds`.
inline double dataset_loss(const DynamicsModel& model, const ConstraintSpec& spec, const Dataset& ds,
                           LossKind kind) {
  if (ds.empty()) throw ValidationError("loss: empty dataset");
  double total = 0.0;
  for (const auto& s : ds.samples)
    total += sample_loss(solve_acceleration(model, spec, {}, s.state).qddot, s.qddot, kind);
  return total / static_cast<double>(ds.size());
}

/// Loss and its parameter gradient (added into `grad`, scaled by `weight`)
/// for one sample.
inline double sample_loss_and_gradient(const TrainableModel& model, const ConstraintSpec& spec,
                                       const Sample& smp, LossKind kind, double weight,
                                       std::span<double> grad) {
  const State& s = smp.state;
  const ElTerms terms = model.el_terms(s);
  const Vec ups = model.drag(s);
  const Mat A = spec.A(s.q);
  const Mat Adot = spec.Adot(s.q, s.qdot);
  const DynamicsSolution sol =
      solve_acceleration(terms, ups, Vec::Zero(s.q.size()), A, Adot, s.qdot, model.dim());
  const double l = sample_loss(sol.qddot, smp.qddot, kind);
  const KktSolver kkt(sol.M, A, model.dim());
  Vec mu;
  const Vec u = kkt.solve(sample_loss_gradient(sol.qddot, smp.qddot, kind),
                          Vec::Zero(A.rows()), mu);
  require_finite(u, "training adjoint");
  model.accumulate_parameter_gradient(s, u, sol.qddot, weight, grad);
  return l;
}

namespace detail {

inline double checked_loss(const DynamicsModel& model, const ConstraintSpec& spec, const Dataset& ds,
                           LossKind kind, std::size_t epoch, const char* which) {
  double l;
  try {
    l = dataset_loss(model, spec, ds, kind);
  } catch (const Error& e) {
    throw TrainingError(std::string(which) + " loss failed: " + e.what(), epoch);
  }
  if (!std::isfinite(l)) throw TrainingError(std::string(which) + " loss is not finite", epoch);
  return l;
}

}  // namespace detail

/// Mini-batch Adam with early stopping on validation loss. On return the
/// model holds the parameters with the best validation loss. Epoch
/// numbering continues from `start_epoch` when resuming with `resume`.
inline TrainReport train(TrainableModel& model, const ConstraintSpec& spec, const Dataset& train_set,
                         const Dataset& val_set, const TrainConfig& cfg,
                         const std::function<void(const EpochRecord&)>& on_epoch = {},
                         const AdamState* resume = nullptr, std::size_t start_epoch = 0) {
  if (train_set.empty() || val_set.empty())
    throw ValidationError("train: training and validation sets must be non-empty");
  if (cfg.batch < 1) throw ValidationError("train: batch size must be >= 1");
  if (!(cfg.adam.lr > 0.0)) throw ValidationError("train: learning rate must be positive");
  const auto t0 = std::chrono::steady_clock::now();

  TrainReport rep;
  if (resume) rep.adam = *resume;
  Vec& params = model.parameters();
  const auto P = params.size();

  const double val0 = detail::checked_loss(model, spec, val_set, cfg.loss, start_epoch, "validation");
  const double train0 = detail::checked_loss(model, spec, train_set, cfg.loss, start_epoch, "training");
  rep.train_loss.push_back(train0);
  rep.val_loss.push_back(val0);
  rep.best_val = val0;
  rep.best_epoch = start_epoch;
  rep.best_params = params;
  if (on_epoch) on_epoch({start_epoch, train0, val0});

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  Vec grad(P);
  std::size_t since_best = 0;

  for (std::size_t e = 1; e <= cfg.epochs; ++e) {
    const std::size_t epoch = start_epoch + e;
    Rng rng(derive_seed(cfg.seed, epoch));
    rng.shuffle(order);
    double sum = 0.0;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += cfg.batch) {
      const std::size_t b1 = std::min(order.size(), b0 + cfg.batch);
      const double w = 1.0 / static_cast<double>(b1 - b0);
      grad.setZero();
      std::span<double> gs{grad.data(), static_cast<std::size_t>(P)};
      try {
        for (std::size_t k = b0; k < b1; ++k)
          sum += sample_loss_and_gradient(model, spec, train_set.samples[order[k]], cfg.loss, w, gs);
      } catch (const Error& err) {
        throw TrainingError(std::string("batch failed: ") + err.what(), epoch);
      }
      if (!grad.allFinite() || !std::isfinite(sum))
        throw TrainingError("non-finite loss or gradient", epoch);
      adam_step(params, grad, rep.adam, cfg.adam);
    }
    const double tl = sum / static_cast<double>(order.size());
    const double vl = detail::checked_loss(model, spec, val_set, cfg.loss, epoch, "validation");
    rep.train_loss.push_back(tl);
    rep.val_loss.push_back(vl);
    rep.epochs_run = e;
    if (on_epoch) on_epoch({epoch, tl, vl});
    if (vl < rep.best_val) {
      rep.best_val = vl;
      rep.best_epoch = epoch;
      rep.best_params = params;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      rep.early_stopped = true;
      break;
    }
  }
  params = rep.best_params;
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace lgnn
