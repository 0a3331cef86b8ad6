#pragma once

// Feed-forward Lagrangian baseline for a fixed system size:
//   L = 1/2 sum_d m_d qdot_d^2 - MLP(q)
// with a learned diagonal mass vector m and a potential MLP over all
// coordinates at once.

#include "lgnn/diff.hpp"
#include "lgnn/mlp.hpp"
#include "lgnn/model.hpp"

namespace lgnn {

struct LnnConfig {
  std::size_t n = 1;
  std::size_t dim = 2;
  std::size_t hidden = 256;

  std::size_t dof() const { return n * dim; }
  friend bool operator==(const LnnConfig&, const LnnConfig&) = default;
};

struct LnnLayout {
  LnnConfig cfg;
  MlpLayout potential;
  std::size_t mass = 0;
  std::vector<TensorInfo> tensors;
  std::size_t size = 0;

  explicit LnnLayout(const LnnConfig& c) : cfg(c) {
    if (c.n < 1 || c.dim < 1 || c.hidden < 1)
      throw ValidationError("lnn config: n, dim and hidden must be >= 1");
    LayoutBuilder b;
    potential = b.mlp("potential", c.dof(), c.hidden, 1);
    mass = b.vector("mass", c.dof(), InitKind::one);
    tensors = b.tensors();
    size = b.size();
  }
};

class LnnModel final : public ScalarFieldBase<LnnModel>, public TrainableModel {
 public:
  explicit LnnModel(const LnnConfig& cfg, std::uint64_t seed = 0)
      : layout_(std::make_shared<LnnLayout>(cfg)),
        params_(initialise_parameters(layout_->tensors, layout_->size, seed)) {}

  const LnnLayout& layout() const { return *layout_; }
  const LnnConfig& config() const { return layout_->cfg; }
  std::size_t dof() const override { return layout_->cfg.dof(); }
  std::size_t dim() const override { return layout_->cfg.dim; }
  Vec& parameters() override { return params_; }
  const Vec& parameters() const override { return params_; }
  bool external_field() const override { return true; }

  double mass(std::size_t d) const {
    return params_[static_cast<Eigen::Index>(layout_->mass + d)];
  }

  template <class T>
  T potential(std::span<const T> q, std::vector<T>* dq = nullptr, GradSink* sink = nullptr) const {
    if (q.size() != dof())
      throw ValidationError("lnn: state has " + std::to_string(q.size()) +
                            " coordinates, model was built for " + std::to_string(dof()));
    MlpBatch<T> batch(layout_->potential, 1);
    auto in = batch.input(0);
    for (std::size_t k = 0; k < q.size(); ++k) in[k] = q[k];
    batch.forward(p());
    const T V = batch.output(0)[0];
    if (dq || sink) {
      std::vector<T> scratch;
      std::vector<T>& out = dq ? *dq : scratch;
      out.assign(dof(), T{});
      const T one{1.0};
      batch.backward(p(), std::span<const T>(&one, 1), out, sink);
    }
    return V;
  }

  template <class T>
  FieldEval<T> eval(std::span<const T> q, std::span<const T> qdot) const {
    FieldEval<T> out;
    std::vector<T> dV;
    const T V = potential<T>(q, &dV);
    T K{};
    out.dqdot.resize(dof());
    for (std::size_t d = 0; d < dof(); ++d) {
      K += 0.5 * mass(d) * (qdot[d] * qdot[d]);
      out.dqdot[d] = mass(d) * qdot[d];
    }
    out.value = K - V;
    out.dq.resize(dof());
    for (std::size_t d = 0; d < dof(); ++d) out.dq[d] = -dV[d];
    return out;
  }

  Vec potential_gradient(const Vec& q) const override {
    std::vector<double> dV;
    potential<double>(detail::as_span(q), &dV);
    return detail::to_vec(dV, "lnn potential gradient");
  }

  ElTerms el_terms(const State& s) const override {
    validate_state(s, dof());
    const auto N = static_cast<Eigen::Index>(dof());
    Mat M = Mat::Zero(N, N);
    for (Eigen::Index d = 0; d < N; ++d) M(d, d) = mass(static_cast<std::size_t>(d));
    return {M, Mat::Zero(N, N), -potential_gradient(s.q)};
  }

  void accumulate_parameter_gradient(const State& s, const Vec& u, const Vec& qddot, double weight,
                                     std::span<double> grad) const override {
    auto q = detail::lift(s.q);
    for (std::size_t i = 0; i < q.size(); ++i) q[i].a = u[static_cast<Eigen::Index>(i)];
    GradSink sink{grad, -weight, 1};
    potential<HyperDual>(q, nullptr, &sink);
    for (std::size_t d = 0; d < dof(); ++d) {
      const auto k = static_cast<Eigen::Index>(d);
      grad[layout_->mass + d] -= weight * u[k] * qddot[k];
    }
  }

 private:
  std::span<const double> p() const {
    return {params_.data(), static_cast<std::size_t>(params_.size())};
  }

  std::shared_ptr<const LnnLayout> layout_;
  Vec params_;
};

}  // namespace lgnn
