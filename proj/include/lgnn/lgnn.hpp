#pragma once

// Lagrangian graph network: node/edge embeddings, message passing and the
// kinetic, potential and drag heads.
//
// Each undirected edge (i, j) is carried as two directed edges i<-j and
// j<-i. Node i aggregates sum_j W_U (h_j || h_ij) over its incoming edges;
// edge ij updates from W_E (h_i || h_j). The edge potential averages the
// two directions so that V does not depend on how an edge is stored.
//
//   h0_i   = sp(MLP_em(one_hot(t_i)))            (separate MLP per head)
//   h0_ij  = sp(MLP_em(w_ij)),  w_ij = |q_i - q_j|
//   T      = sum_i sp(MLP_T(h0T_i || qdot_i))
//   V      = 1/2 sum_{directed ij} sp(MLP_vij(z_ij))
//            [+ sum_i sp(MLP_vi(h0V_i || q_i))       with an external field]
//            [+ sum_i sp(MLP_mp,vi(z_i))             topological node term]
//   Ups_i  = MLP_D(h0D_i || qdot_i)                   (width dim, no outer sp)

#include "lgnn/diff.hpp"
#include "lgnn/graph.hpp"
#include "lgnn/mlp.hpp"
#include "lgnn/model.hpp"

#include <memory>
#include <string>
#include <vector>

namespace lgnn {

struct LgnnConfig {
  std::size_t n_types = 1;
  std::size_t dim = 2;
  std::size_t embed = 5;
  std::size_t hidden = 5;
  std::size_t layers = 1;  // message-passing depth L >= 1
  bool gravity = false;    // node potential on absolute position
  bool drag = false;       // learned drag head
  bool topo_node = false;  // node potential on z_i

  void validate() const {
    if (n_types < 1 || dim < 1 || embed < 1 || hidden < 1 || layers < 1)
      throw ValidationError("lgnn config: n_types, dim, embed, hidden and layers must be >= 1");
  }
  friend bool operator==(const LgnnConfig&, const LgnnConfig&) = default;
};

struct LgnnLayout {
  LgnnConfig cfg;
  MlpLayout em_T, em_V, em_D, em_E;
  std::vector<MatrixShape> W_U, W_E;
  std::vector<MlpLayout> mp_node, mp_edge;
  MlpLayout head_T, head_D, head_vi, head_vij, head_mp_vi;
  std::vector<TensorInfo> tensors;
  std::size_t size = 0;

  explicit LgnnLayout(const LgnnConfig& c) : cfg(c) {
    c.validate();
    LayoutBuilder b;
    const std::size_t E = c.embed, H = c.hidden, D = c.dim;
    em_T = b.mlp("embed_T", c.n_types, H, E);
    em_V = b.mlp("embed_V", c.n_types, H, E);
    if (c.drag) em_D = b.mlp("embed_D", c.n_types, H, E);
    em_E = b.mlp("embed_edge", 1, H, E);
    for (std::size_t l = 0; l < c.layers; ++l) {
      const std::string s = std::to_string(l);
      W_U.push_back(b.matrix("W_U" + s, E, 2 * E));
      W_E.push_back(b.matrix("W_E" + s, E, 2 * E));
      mp_node.push_back(b.mlp("mp_node" + s, E, H, E));
      mp_edge.push_back(b.mlp("mp_edge" + s, E, H, E));
    }
    head_T = b.mlp("head_T", E + D, H, 1);
    if (c.drag) head_D = b.mlp("head_D", E + D, H, D);
    if (c.gravity) head_vi = b.mlp("head_vi", E + D, H, 1);
    head_vij = b.mlp("head_vij", E, H, 1);
    if (c.topo_node) head_mp_vi = b.mlp("head_mp_vi", E, H, 1);
    tensors = b.tensors();
    // Untrained drag is exactly zero. Non-negative weights after the first
    // kinetic layer make the untrained kinetic energy convex in qdot.
    for (auto& t : tensors) {
      if (t.name == "head_D.w2") t.init = InitKind::zero;
      if (t.name == "head_T.w1" || t.name == "head_T.w2") t.init = InitKind::glorot_abs;
    }
    size = b.size();
  }

  /// Whether layer l must update node embeddings (the last layer's node
  /// output is only read by the topological node term).
  bool node_update(std::size_t l) const { return l + 1 < cfg.layers || cfg.topo_node; }
};

/// Parameters of one trained or untrained network; system independent.
struct LgnnNetwork {
  std::shared_ptr<const LgnnLayout> layout;
  Vec params;

  explicit LgnnNetwork(const LgnnConfig& cfg, std::uint64_t seed = 0)
      : layout(std::make_shared<LgnnLayout>(cfg)),
        params(initialise_parameters(layout->tensors, layout->size, seed)) {}

  const LgnnConfig& config() const { return layout->cfg; }
  std::span<const double> p() const { return {params.data(), static_cast<std::size_t>(params.size())}; }
};

namespace detail {

template <class T>
T sp_(const T& x) {
  return squareplus(x);
}
template <class T>
T sp1_(const T& x) {
  return squareplus_d1(x);
}
inline double sqrt_(double x) { return std::sqrt(x); }
inline HyperDual sqrt_(const HyperDual& x) { return sqrt(x); }

/// Node embeddings h0 = sp(MLP_em(one_hot(type))), computed once per type.
template <class T>
class NodeEmbedding {
 public:
  void forward(const MlpLayout& L, std::span<const double> p, std::size_t n_types) {
    batch_.reset(L, n_types);
    for (std::size_t t = 0; t < n_types; ++t) {
      auto in = batch_.input(t);
      for (std::size_t k = 0; k < n_types; ++k) in[k] = T{k == t ? 1.0 : 0.0};
    }
    batch_.forward(p);
  }
  T h(std::size_t type, std::size_t k) const { return sp_(batch_.output(type)[k]); }

  /// Parameter adjoint given per-node adjoints of h0 (n x embed).
  void backward(std::span<const double> p, const std::vector<int>& types, const std::vector<T>& g,
                std::size_t E, GradSink* sink) const {
    if (!sink) return;
    std::vector<T> gt(batch_.count() * E, T{});
    for (std::size_t i = 0; i < types.size(); ++i) {
      const auto t = static_cast<std::size_t>(types[i]);
      for (std::size_t k = 0; k < E; ++k) gt[t * E + k] += g[i * E + k];
    }
    for (std::size_t t = 0; t < batch_.count(); ++t)
      for (std::size_t k = 0; k < E; ++k) gt[t * E + k] = gt[t * E + k] * sp1_(batch_.output(t)[k]);
    batch_.backward(p, gt, {}, sink);
  }

 private:
  MlpBatch<T> batch_;
};

}  // namespace detail

/// Potential V(q) with its reverse pass. Adjoint of V is 1.
template <class T>
class PotentialPass {
 public:
  PotentialPass(const LgnnLayout& L, std::span<const double> p, const SystemGraph& g)
      : L_(L), p_(p), g_(g) {}

  T forward(std::span<const T> q) {
    const auto& c = L_.cfg;
    const std::size_t n = g_.n, m = g_.edges.size(), E = c.embed, D = c.dim;
    q_ = q;
    emb_.forward(L_.em_V, p_, c.n_types);
    H_.assign(c.layers + 1, {});
    G_.assign(c.layers + 1, {});
    H_[0].resize(n * E);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < E; ++k)
        H_[0][i * E + k] = emb_.h(static_cast<std::size_t>(g_.node_types[i]), k);

    diff_.assign(m * D, T{});
    w_.assign(m, T{});
    edge_em_.reset(L_.em_E, m);
    for (std::size_t e = 0; e < m; ++e) {
      const auto [a, b] = g_.edges[e];
      T r2{};
      for (std::size_t d = 0; d < D; ++d) {
        diff_[e * D + d] = q[a * D + d] - q[b * D + d];
        r2 += diff_[e * D + d] * diff_[e * D + d];
      }
      w_[e] = detail::sqrt_(r2);
      edge_em_.input(e)[0] = w_[e];
    }
    edge_em_.forward(p_);
    G_[0].resize(2 * m * E);
    for (std::size_t e = 0; e < m; ++e)
      for (std::size_t k = 0; k < E; ++k) {
        const T h = detail::sp_(edge_em_.output(e)[k]);
        G_[0][(2 * e) * E + k] = h;
        G_[0][(2 * e + 1) * E + k] = h;
      }

    mp_edge_.resize(c.layers);
    mp_node_.resize(c.layers);
    for (std::size_t l = 0; l < c.layers; ++l) {
      auto& me = mp_edge_[l];
      me.reset(L_.mp_edge[l], 2 * m);
      for (std::size_t de = 0; de < 2 * m; ++de) {
        const auto [a, b] = ends(de);
        auto in = me.input(de);
        mix(L_.W_E[l], &H_[l][a * E], &H_[l][b * E], in.data(), &G_[l][de * E]);
      }
      me.forward(p_);
      G_[l + 1].resize(2 * m * E);
      for (std::size_t de = 0; de < 2 * m; ++de)
        for (std::size_t k = 0; k < E; ++k) G_[l + 1][de * E + k] = detail::sp_(me.output(de)[k]);

      if (!L_.node_update(l)) continue;
      auto& mn = mp_node_[l];
      mn.reset(L_.mp_node[l], n);
      for (std::size_t i = 0; i < n; ++i) {
        auto in = mn.input(i);
        for (std::size_t k = 0; k < E; ++k) in[k] = H_[l][i * E + k];
      }
      for (std::size_t de = 0; de < 2 * m; ++de) {
        const auto [a, b] = ends(de);
        auto in = mn.input(a);
        mix(L_.W_U[l], &H_[l][b * E], &G_[l][de * E], in.data(), nullptr);
      }
      mn.forward(p_);
      H_[l + 1].resize(n * E);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < E; ++k) H_[l + 1][i * E + k] = detail::sp_(mn.output(i)[k]);
    }

    T V{};
    const auto& GL = G_[c.layers];
    vij_.reset(L_.head_vij, 2 * m);
    for (std::size_t de = 0; de < 2 * m; ++de) {
      auto in = vij_.input(de);
      for (std::size_t k = 0; k < E; ++k) in[k] = GL[de * E + k];
    }
    vij_.forward(p_);
    for (std::size_t de = 0; de < 2 * m; ++de) V += 0.5 * detail::sp_(vij_.output(de)[0]);

    if (c.gravity) {
      vi_.reset(L_.head_vi, n);
      for (std::size_t i = 0; i < n; ++i) {
        auto in = vi_.input(i);
        for (std::size_t k = 0; k < E; ++k) in[k] = H_[0][i * E + k];
        for (std::size_t d = 0; d < D; ++d) in[E + d] = q[i * D + d];
      }
      vi_.forward(p_);
      for (std::size_t i = 0; i < n; ++i) V += detail::sp_(vi_.output(i)[0]);
    }
    if (c.topo_node) {
      mpvi_.reset(L_.head_mp_vi, n);
      for (std::size_t i = 0; i < n; ++i) {
        auto in = mpvi_.input(i);
        for (std::size_t k = 0; k < E; ++k) in[k] = H_[c.layers][i * E + k];
      }
      mpvi_.forward(p_);
      for (std::size_t i = 0; i < n; ++i) V += detail::sp_(mpvi_.output(i)[0]);
    }
    return V;
  }

  /// Adds dV/dq into dq (length n*dim) and parameter adjoints into sink.
  void backward(std::span<T> dq, GradSink* sink) const {
    const auto& c = L_.cfg;
    const std::size_t n = g_.n, m = g_.edges.size(), E = c.embed, D = c.dim;
    std::vector<T> gH(n * E, T{}), gG(2 * m * E, T{}), gH0(n * E, T{});

    std::vector<T> adj(2 * m);
    for (std::size_t de = 0; de < 2 * m; ++de) adj[de] = 0.5 * detail::sp1_(vij_.output(de)[0]);
    vij_.backward(p_, adj, gG, sink);

    if (c.gravity) {
      std::vector<T> a(n), gin(n * (E + D), T{});
      for (std::size_t i = 0; i < n; ++i) a[i] = detail::sp1_(vi_.output(i)[0]);
      vi_.backward(p_, a, gin, sink);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < E; ++k) gH0[i * E + k] += gin[i * (E + D) + k];
        for (std::size_t d = 0; d < D; ++d) dq[i * D + d] += gin[i * (E + D) + E + d];
      }
    }
    if (c.topo_node) {
      std::vector<T> a(n);
      for (std::size_t i = 0; i < n; ++i) a[i] = detail::sp1_(mpvi_.output(i)[0]);
      mpvi_.backward(p_, a, gH, sink);
    }

    for (std::size_t l = c.layers; l-- > 0;) {
      std::vector<T> gHl(n * E, T{}), gGl(2 * m * E, T{});
      if (L_.node_update(l)) {
        const auto& mn = mp_node_[l];
        std::vector<T> a(n * E), gin(n * E, T{});
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t k = 0; k < E; ++k)
            a[i * E + k] = gH[i * E + k] * detail::sp1_(mn.output(i)[k]);
        mn.backward(p_, a, gin, sink);
        for (std::size_t x = 0; x < n * E; ++x) gHl[x] += gin[x];
        for (std::size_t de = 0; de < 2 * m; ++de) {
          const auto [a_, b] = ends(de);
          mix_adjoint(L_.W_U[l], &H_[l][b * E], &G_[l][de * E], &gin[a_ * E], &gHl[b * E],
                      &gGl[de * E], sink);
        }
      }
      {
        const auto& me = mp_edge_[l];
        std::vector<T> a(2 * m * E), gin(2 * m * E, T{});
        for (std::size_t de = 0; de < 2 * m; ++de)
          for (std::size_t k = 0; k < E; ++k)
            a[de * E + k] = gG[de * E + k] * detail::sp1_(me.output(de)[k]);
        me.backward(p_, a, gin, sink);
        for (std::size_t de = 0; de < 2 * m; ++de) {
          const auto [a_, b] = ends(de);
          for (std::size_t k = 0; k < E; ++k) gGl[de * E + k] += gin[de * E + k];
          mix_adjoint(L_.W_E[l], &H_[l][a_ * E], &H_[l][b * E], &gin[de * E], &gHl[a_ * E],
                      &gHl[b * E], sink);
        }
      }
      gH.swap(gHl);
      gG.swap(gGl);
    }
    for (std::size_t x = 0; x < n * E; ++x) gH0[x] += gH[x];

    std::vector<T> a(m * E), gw(m, T{});
    for (std::size_t e = 0; e < m; ++e)
      for (std::size_t k = 0; k < E; ++k)
        a[e * E + k] = (gG[(2 * e) * E + k] + gG[(2 * e + 1) * E + k]) *
                       detail::sp1_(edge_em_.output(e)[k]);
    edge_em_.backward(p_, a, gw, sink);
    for (std::size_t e = 0; e < m; ++e) {
      const auto [ia, ib] = g_.edges[e];
      const T s = gw[e] / w_[e];
      for (std::size_t d = 0; d < D; ++d) {
        const T f = s * diff_[e * D + d];
        dq[ia * D + d] += f;
        dq[ib * D + d] -= f;
      }
    }
    emb_.backward(p_, g_.node_types, gH0, E, sink);
  }

  /// Final edge embeddings z_ij, directed order (2e: i<-j, 2e+1: j<-i).
  const std::vector<T>& edge_embeddings(std::size_t layer) const { return G_.at(layer); }
  const std::vector<T>& node_embeddings(std::size_t layer) const { return H_.at(layer); }

 private:
  // Directed edge 2e receives at edges[e].i from edges[e].j; 2e+1 the reverse.
  std::pair<std::size_t, std::size_t> ends(std::size_t de) const {
    const auto& e = g_.edges[de / 2];
    return de % 2 == 0 ? std::pair{e.i, e.j} : std::pair{e.j, e.i};
  }

  // out += W (x || y) [+ base]; W is E x 2E.
  void mix(const MatrixShape& W, const T* x, const T* y, T* out, const T* base) const {
    const std::size_t E = W.rows;
    for (std::size_t r = 0; r < E; ++r) {
      T acc = base ? base[r] : out[r];
      for (std::size_t k = 0; k < E; ++k) acc += p_[W.at(r, k)] * x[k];
      for (std::size_t k = 0; k < E; ++k) acc += p_[W.at(r, E + k)] * y[k];
      out[r] = acc;
    }
  }

  void mix_adjoint(const MatrixShape& W, const T* x, const T* y, const T* g, T* gx, T* gy,
                   GradSink* sink) const {
    const std::size_t E = W.rows;
    for (std::size_t r = 0; r < E; ++r) {
      for (std::size_t k = 0; k < E; ++k) {
        gx[k] += p_[W.at(r, k)] * g[r];
        gy[k] += p_[W.at(r, E + k)] * g[r];
      }
      if (sink)
        for (std::size_t k = 0; k < E; ++k) {
          sink->add_product(W.at(r, k), g[r], x[k]);
          sink->add_product(W.at(r, E + k), g[r], y[k]);
        }
    }
  }

  const LgnnLayout& L_;
  std::span<const double> p_;
  const SystemGraph& g_;
  std::span<const T> q_;
  detail::NodeEmbedding<T> emb_;
  std::vector<std::vector<T>> H_, G_;
  std::vector<T> diff_, w_;
  MlpBatch<T> edge_em_, vij_, vi_, mpvi_;
  std::vector<MlpBatch<T>> mp_edge_, mp_node_;
};

/// Per-particle head on (h0_i || qdot_i): kinetic (scalar, sp-wrapped) or drag (vector).
template <class T>
class VelocityHeadPass {
 public:
  VelocityHeadPass(const MlpLayout& em, const MlpLayout& head, bool wrap, const LgnnConfig& c,
                   std::span<const double> p, const SystemGraph& g)
      : em_(em), head_(head), wrap_(wrap), c_(c), p_(p), g_(g) {}

  void forward(std::span<const T> qdot) {
    const std::size_t n = g_.n, E = c_.embed, D = c_.dim;
    emb_.forward(em_, p_, c_.n_types);
    batch_.reset(head_, n);
    for (std::size_t i = 0; i < n; ++i) {
      auto in = batch_.input(i);
      for (std::size_t k = 0; k < E; ++k) in[k] = emb_.h(static_cast<std::size_t>(g_.node_types[i]), k);
      for (std::size_t d = 0; d < D; ++d) in[E + d] = qdot[i * D + d];
    }
    batch_.forward(p_);
  }

  /// Per-particle outputs (after the outer squareplus when wrapped).
  T output(std::size_t i, std::size_t k) const {
    const T o = batch_.output(i)[k];
    return wrap_ ? detail::sp_(o) : o;
  }

  /// out_adj: n x out adjoints of output(i, k). Adds into dqdot.
  void backward(std::span<const T> out_adj, std::span<T> dqdot, GradSink* sink) const {
    const std::size_t n = g_.n, E = c_.embed, D = c_.dim, O = head_.out;
    std::vector<T> a(n * O), gin(n * (E + D), T{});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < O; ++k)
        a[i * O + k] = wrap_ ? out_adj[i * O + k] * detail::sp1_(batch_.output(i)[k]) : out_adj[i * O + k];
    batch_.backward(p_, a, gin, sink);
    std::vector<T> gh0(n * E);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < E; ++k) gh0[i * E + k] = gin[i * (E + D) + k];
      if (!dqdot.empty())
        for (std::size_t d = 0; d < D; ++d) dqdot[i * D + d] += gin[i * (E + D) + E + d];
    }
    emb_.backward(p_, g_.node_types, gh0, E, sink);
  }

 private:
  const MlpLayout& em_;
  const MlpLayout& head_;
  bool wrap_;
  const LgnnConfig& c_;
  std::span<const double> p_;
  const SystemGraph& g_;
  detail::NodeEmbedding<T> emb_;
  MlpBatch<T> batch_;
};

/// An LGNN bound to one system graph (topology and node types).
class LgnnModel final : public ScalarFieldBase<LgnnModel>, public TrainableModel {
 public:
  LgnnModel(std::shared_ptr<LgnnNetwork> net, SystemGraph graph)
      : net_(std::move(net)), graph_(std::move(graph)) {
    graph_.validate();
    const auto& c = net_->config();
    if (graph_.dim != c.dim)
      throw ValidationError("lgnn: graph dim " + std::to_string(graph_.dim) +
                            " does not match network dim " + std::to_string(c.dim));
    if (graph_.n_types > c.n_types)
      throw ValidationError("lgnn: graph uses " + std::to_string(graph_.n_types) +
                            " node types, network has " + std::to_string(c.n_types));
  }

  const LgnnNetwork& network() const { return *net_; }
  std::shared_ptr<LgnnNetwork> network_ptr() const { return net_; }
  const SystemGraph& graph() const { return graph_; }
  const LgnnLayout& layout() const { return *net_->layout; }

  std::size_t dof() const override { return graph_.dof(); }
  std::size_t dim() const override { return graph_.dim; }
  Vec& parameters() override { return net_->params; }
  const Vec& parameters() const override { return net_->params; }

  template <class T>
  T kinetic(std::span<const T> qdot, std::vector<T>* dqdot = nullptr,
            GradSink* sink = nullptr) const {
    const auto& L = layout();
    VelocityHeadPass<T> pass(L.em_T, L.head_T, true, L.cfg, net_->p(), graph_);
    pass.forward(qdot);
    T K{};
    for (std::size_t i = 0; i < graph_.n; ++i) K += pass.output(i, 0);
    if (dqdot || sink) {
      std::vector<T> ones(graph_.n, T{1.0}), scratch;
      std::vector<T>& out = dqdot ? *dqdot : scratch;
      out.assign(dof(), T{});
      pass.backward(ones, out, sink);
    }
    return K;
  }

  template <class T>
  T potential(std::span<const T> q, std::vector<T>* dq = nullptr, GradSink* sink = nullptr) const {
    PotentialPass<T> pass(layout(), net_->p(), graph_);
    const T V = pass.forward(q);
    if (dq || sink) {
      std::vector<T> scratch;
      std::vector<T>& out = dq ? *dq : scratch;
      out.assign(dof(), T{});
      pass.backward(out, sink);
    }
    return V;
  }

  template <class T>
  FieldEval<T> eval(std::span<const T> q, std::span<const T> qdot) const {
    FieldEval<T> out;
    std::vector<T> dV;
    const T K = kinetic<T>(qdot, &out.dqdot);
    const T V = potential<T>(q, &dV);
    out.value = K - V;
    out.dq.resize(dV.size());
    for (std::size_t i = 0; i < dV.size(); ++i) out.dq[i] = -dV[i];
    return out;
  }

  /// Per-particle kinetic terms tau_i.
  std::vector<double> kinetic_terms(const Vec& qdot) const {
    const auto& L = layout();
    VelocityHeadPass<double> pass(L.em_T, L.head_T, true, L.cfg, net_->p(), graph_);
    pass.forward(detail::as_span(qdot));
    std::vector<double> out(graph_.n);
    for (std::size_t i = 0; i < graph_.n; ++i) out[i] = pass.output(i, 0);
    return out;
  }

  /// Block-diagonal mass matrix: tau_i depends on qdot_i only, so one
  /// seeded pass per axis fills column r of every block.
  Mat mass_matrix(const Vec& qdot) const {
    const std::size_t n = graph_.n, D = graph_.dim;
    const auto N = static_cast<Eigen::Index>(dof());
    Mat M = Mat::Zero(N, N);
    auto qd = detail::lift(qdot);
    std::vector<HyperDual> g;
    for (std::size_t r = 0; r < D; ++r) {
      for (std::size_t i = 0; i < n; ++i) qd[i * D + r].a = 1.0;
      kinetic<HyperDual>(qd, &g);
      for (std::size_t i = 0; i < n; ++i) {
        qd[i * D + r].a = 0.0;
        for (std::size_t s = 0; s < D; ++s)
          M(static_cast<Eigen::Index>(i * D + s), static_cast<Eigen::Index>(i * D + r)) =
              g[i * D + s].a;
      }
    }
    require_finite(M, "lgnn mass matrix");
    const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
    if ((M - M.transpose()).cwiseAbs().maxCoeff() > kHessianAsymmetryTol * scale)
      throw NumericError("lgnn mass matrix: asymmetry exceeds tolerance");
    return 0.5 * (M + M.transpose());
  }

  bool external_field() const override { return net_->config().gravity; }

  Vec potential_gradient(const Vec& q) const override {
    std::vector<double> dV;
    potential<double>(detail::as_span(q), &dV);
    return detail::to_vec(dV, "lgnn potential gradient");
  }

  ElTerms el_terms(const State& s) const override {
    validate_state(s, dof());
    const auto N = static_cast<Eigen::Index>(dof());
    return {mass_matrix(s.qdot), Mat::Zero(N, N), -potential_gradient(s.q)};
  }

  Vec drag(const State& s) const override {
    if (!net_->config().drag) return Vec::Zero(s.qdot.size());
    validate_state(s, dof());
    const auto& L = layout();
    VelocityHeadPass<double> pass(L.em_D, L.head_D, false, L.cfg, net_->p(), graph_);
    pass.forward(detail::as_span(s.qdot));
    Vec out(s.qdot.size());
    const std::size_t D = graph_.dim;
    for (std::size_t i = 0; i < graph_.n; ++i)
      for (std::size_t d = 0; d < D; ++d) out[static_cast<Eigen::Index>(i * D + d)] = pass.output(i, d);
    require_finite(out, "lgnn drag");
    return out;
  }

  void accumulate_parameter_gradient(const State& s, const Vec& u, const Vec& qddot, double weight,
                                     std::span<double> grad) const override {
    // u.Pi = -D_q V[u]: first-order coefficient along u.
    {
      auto q = detail::lift(s.q);
      for (std::size_t i = 0; i < q.size(); ++i) q[i].a = u[static_cast<Eigen::Index>(i)];
      GradSink sink{grad, -weight, 1};
      potential<HyperDual>(q, nullptr, &sink);
    }
    // u.M.qddot = D^2_qdot T[u, qddot]: mixed coefficient.
    {
      auto qd = detail::lift(s.qdot);
      for (std::size_t i = 0; i < qd.size(); ++i) {
        qd[i].a = u[static_cast<Eigen::Index>(i)];
        qd[i].b = qddot[static_cast<Eigen::Index>(i)];
      }
      GradSink sink{grad, -weight, 3};
      kinetic<HyperDual>(qd, nullptr, &sink);
    }
    if (net_->config().drag) {
      const auto& L = layout();
      VelocityHeadPass<double> pass(L.em_D, L.head_D, false, L.cfg, net_->p(), graph_);
      pass.forward(detail::as_span(s.qdot));
      GradSink sink{grad, weight, 0};
      pass.backward(detail::as_span(u), {}, &sink);
    }
  }

 private:
  std::shared_ptr<LgnnNetwork> net_;
  SystemGraph graph_;
};

/// Per-particle drag of a single particle of type `type` at velocity v.
inline Vec lgnn_particle_drag(const LgnnNetwork& net, int type, const Vec& v) {
  const auto& c = net.config();
  if (static_cast<std::size_t>(v.size()) != c.dim) throw ValidationError("drag: velocity has wrong dim");
  SystemGraph g = build_system_graph({Topology::explicit_edges, 1, c.dim, {type}, c.n_types, {}});
  auto shared = std::make_shared<LgnnNetwork>(net);
  LgnnModel m(shared, g);
  return m.drag({Vec::Zero(v.size()), v, 0.0});
}

/// Learned mass of a single particle of type `type`: d2 tau / d qdot_x^2 at rest.
inline double lgnn_particle_mass(const LgnnNetwork& net, int type) {
  const auto& c = net.config();
  SystemGraph g = build_system_graph({Topology::explicit_edges, 1, c.dim, {type}, c.n_types, {}});
  LgnnModel m(std::make_shared<LgnnNetwork>(net), g);
  return m.mass_matrix(Vec::Zero(static_cast<Eigen::Index>(c.dim)))(0, 0);
}

}  // namespace lgnn
