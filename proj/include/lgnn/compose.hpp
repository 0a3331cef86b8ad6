#pragma once

// Composition of separately trained LGNNs on a system built from their
// subsystems: potentials add over an edge partition, kinetic terms come
// per node from one owning model.
//
// A learned Lagrangian is only fixed up to a constant factor, so each
// model is divided by its learned mass at rest (the mean diagonal of its
// mass block at qdot = 0). This assumes the training systems used equal
// particle masses.

#include "lgnn/lgnn.hpp"

#include <set>

namespace lgnn {

struct ComposePart {
  std::shared_ptr<LgnnNetwork> net;
  std::vector<Edge> edges;         // global node indices
  std::vector<std::size_t> nodes;  // extra nodes beyond edge endpoints
};

class ComposedModel final : public ScalarFieldBase<ComposedModel>, public DynamicsModel {
 public:
  ComposedModel(SystemGraph full, std::vector<ComposePart> parts,
                std::vector<std::size_t> kinetic_owner = {}, bool normalize_gauge = true)
      : full_(std::move(full)) {
    full_.validate();
    if (parts.empty()) throw ValidationError("compose: at least one part is required");
    std::set<std::pair<std::size_t, std::size_t>> want, have;
    for (const auto& e : full_.edges) want.insert(std::minmax(e.i, e.j));

    for (const auto& part : parts) {
      if (!part.net) throw ValidationError("compose: part without a network");
      if (part.net->config().dim != full_.dim)
        throw ValidationError("compose: part dimension does not match the system");
      std::set<std::size_t> ns(part.nodes.begin(), part.nodes.end());
      for (const auto& e : part.edges) {
        const auto key = std::minmax(e.i, e.j);
        if (!want.count(key))
          throw ValidationError("compose: edge (" + std::to_string(e.i) + "," + std::to_string(e.j) +
                                ") is not in the system graph");
        if (!have.insert(key).second)
          throw ValidationError("compose: edge (" + std::to_string(e.i) + "," + std::to_string(e.j) +
                                ") is assigned to more than one part");
        ns.insert(e.i);
        ns.insert(e.j);
      }
      for (auto v : ns)
        if (v >= full_.n) throw ValidationError("compose: node index out of range");
      Sub sub;
      sub.nodes.assign(ns.begin(), ns.end());
      std::vector<std::size_t> local(full_.n, SIZE_MAX);
      for (std::size_t k = 0; k < sub.nodes.size(); ++k) local[sub.nodes[k]] = k;
      std::vector<Edge> le;
      for (const auto& e : part.edges) le.push_back({local[e.i], local[e.j]});
      // Each model sees its own training types; subsystems use type 0.
      sub.model = std::make_unique<LgnnModel>(
          part.net, build_system_graph({Topology::explicit_edges, sub.nodes.size(), full_.dim, {},
                                        part.net->config().n_types, le}));
      subs_.push_back(std::move(sub));
    }
    for (const auto& key : want)
      if (!have.count(key))
        throw ValidationError("compose: edge (" + std::to_string(key.first) + "," +
                              std::to_string(key.second) + ") is not covered by any part");

    owner_ = kinetic_owner;
    if (owner_.empty()) {
      owner_.assign(full_.n, SIZE_MAX);
      for (std::size_t k = 0; k < subs_.size(); ++k)
        for (auto v : subs_[k].nodes)
          if (owner_[v] == SIZE_MAX) owner_[v] = k;
    }
    if (owner_.size() != full_.n) throw ValidationError("compose: one kinetic owner per node required");
    for (std::size_t v = 0; v < full_.n; ++v) {
      if (owner_[v] >= subs_.size())
        throw ValidationError("compose: node " + std::to_string(v) + " has no kinetic owner");
      const auto& ns = subs_[owner_[v]].nodes;
      if (!std::binary_search(ns.begin(), ns.end(), v))
        throw ValidationError("compose: kinetic owner of node " + std::to_string(v) +
                              " does not contain it");
    }

    for (auto& sub : subs_) {
      sub.scale = 1.0;
      if (normalize_gauge) {
        const Mat M = sub.model->mass_matrix(Vec::Zero(static_cast<Eigen::Index>(sub.model->dof())));
        sub.scale = M.diagonal().mean();
        if (!(sub.scale > 0.0))
          throw ValidationError("compose: learned mass at rest is not positive");
      }
    }
  }

  std::size_t dof() const override { return full_.dof(); }
  std::size_t dim() const override { return full_.dim; }
  const SystemGraph& graph() const { return full_; }
  std::size_t parts() const { return subs_.size(); }
  double scale(std::size_t k) const { return subs_.at(k).scale; }

  template <class T>
  FieldEval<T> eval(std::span<const T> q, std::span<const T> qdot) const {
    const std::size_t D = full_.dim;
    FieldEval<T> out;
    out.dq.assign(dof(), T{});
    out.dqdot.assign(dof(), T{});
    for (const auto& sub : subs_) {
      const double inv = 1.0 / sub.scale;
      std::vector<T> ql(sub.nodes.size() * D), qdl(sub.nodes.size() * D);
      for (std::size_t k = 0; k < sub.nodes.size(); ++k)
        for (std::size_t d = 0; d < D; ++d) {
          ql[k * D + d] = q[sub.nodes[k] * D + d];
          qdl[k * D + d] = qdot[sub.nodes[k] * D + d];
        }
      std::vector<T> dV;
      out.value -= inv * sub.model->template potential<T>(ql, &dV);
      for (std::size_t k = 0; k < sub.nodes.size(); ++k)
        for (std::size_t d = 0; d < D; ++d) out.dq[sub.nodes[k] * D + d] -= inv * dV[k * D + d];
    }
    // Kinetic: per-node terms from the owner, evaluated one node at a time
    // through the owner's embedding of that node's local type.
    for (std::size_t v = 0; v < full_.n; ++v) {
      const auto& sub = subs_[owner_[v]];
      const double inv = 1.0 / sub.scale;
      const auto& single = kinetic_probe(owner_[v]);
      std::vector<T> qd1(D), g;
      for (std::size_t d = 0; d < D; ++d) qd1[d] = qdot[v * D + d];
      out.value += inv * single.template kinetic<T>(qd1, &g);
      for (std::size_t d = 0; d < D; ++d) out.dqdot[v * D + d] += inv * g[d];
    }
    return out;
  }

  ElTerms el_terms(const State& s) const override {
    validate_state(s, dof());
    const std::size_t D = full_.dim;
    const auto N = static_cast<Eigen::Index>(dof());
    ElTerms t{Mat::Zero(N, N), Mat::Zero(N, N), Vec::Zero(N)};
    for (std::size_t v = 0; v < full_.n; ++v) {
      const auto& sub = subs_[owner_[v]];
      const auto o = static_cast<Eigen::Index>(v * D);
      t.M.block(o, o, static_cast<Eigen::Index>(D), static_cast<Eigen::Index>(D)) =
          kinetic_probe(owner_[v]).mass_matrix(s.qdot.segment(o, static_cast<Eigen::Index>(D))) /
          sub.scale;
    }
    for (const auto& sub : subs_) {
      Vec ql(static_cast<Eigen::Index>(sub.nodes.size() * D));
      for (std::size_t k = 0; k < sub.nodes.size(); ++k)
        ql.segment(static_cast<Eigen::Index>(k * D), static_cast<Eigen::Index>(D)) =
            s.q.segment(static_cast<Eigen::Index>(sub.nodes[k] * D), static_cast<Eigen::Index>(D));
      const Vec g = sub.model->potential_gradient(ql);
      for (std::size_t k = 0; k < sub.nodes.size(); ++k)
        t.Pi.segment(static_cast<Eigen::Index>(sub.nodes[k] * D), static_cast<Eigen::Index>(D)) -=
            g.segment(static_cast<Eigen::Index>(k * D), static_cast<Eigen::Index>(D)) / sub.scale;
    }
    return t;
  }

  /// Sum of the part potentials (gauge-normalised).
  double potential(const Vec& q) const {
    State s{q, Vec::Zero(q.size()), 0.0};
    return -field_value(*this, s) + kinetic_at_rest();
  }

 private:
  struct Sub {
    std::vector<std::size_t> nodes;
    std::unique_ptr<LgnnModel> model;
    double scale = 1.0;
  };

  // Single-node graph of type 0 for the owner's kinetic head.
  const LgnnModel& kinetic_probe(std::size_t k) const {
    if (probes_.size() != subs_.size()) {
      probes_.clear();
      for (const auto& sub : subs_)
        probes_.push_back(std::make_unique<LgnnModel>(
            sub.model->network_ptr(),
            build_system_graph({Topology::explicit_edges, 1, full_.dim, {0},
                                sub.model->network().config().n_types, {}})));
    }
    return *probes_[k];
  }

  double kinetic_at_rest() const {
    double K = 0.0;
    const std::vector<double> zero(full_.dim, 0.0);
    for (std::size_t v = 0; v < full_.n; ++v)
      K += kinetic_probe(owner_[v]).kinetic<double>(zero) / subs_[owner_[v]].scale;
    return K;
  }

  SystemGraph full_;
  std::vector<Sub> subs_;
  std::vector<std::size_t> owner_;
  mutable std::vector<std::unique_ptr<LgnnModel>> probes_;
};

/// Pendulum-trained and spring-trained networks on the hybrid system:
/// bars between bobs go to the pendulum part (with its gravity term on the
/// bobs), springs to the spring part. Bobs take their kinetic term from the
/// pendulum model, free masses from the spring model.
inline ComposedModel compose_hybrid(const SystemGraph& hybrid_graph,
                                    const std::vector<Edge>& pendulum_edges,
                                    const std::vector<std::size_t>& bobs,
                                    std::shared_ptr<LgnnNetwork> pendulum_net,
                                    const std::vector<Edge>& spring_edges,
                                    std::shared_ptr<LgnnNetwork> spring_net,
                                    bool normalize_gauge = true) {
  std::vector<std::size_t> owner(hybrid_graph.n, 1);
  for (auto b : bobs) {
    if (b >= hybrid_graph.n) throw ValidationError("compose: bob index out of range");
    owner[b] = 0;
  }
  return ComposedModel(hybrid_graph,
                       {{std::move(pendulum_net), pendulum_edges, bobs},
                        {std::move(spring_net), spring_edges, {}}},
                       owner, normalize_gauge);
}

}  // namespace lgnn
