#pragma once

// Flat parameter storage and the two-hidden-layer MLP used by every
// learned head.
//
// Parameters of a model live in one contiguous Vec; layouts record where
// each tensor sits so the optimiser and serializer see a flat vector and
// the model sees structured views.

#include "lgnn/core.hpp"
#include "lgnn/jet.hpp"
#include "lgnn/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace lgnn {

/// Accumulates parameter adjoints into a flat gradient buffer.
///
/// When the adjoint pass runs in HyperDual arithmetic, `component` picks
/// which Taylor coefficient lands in the buffer (0 value, 1 = d/da,
/// 3 = d2/dadb).
struct GradSink {
  std::span<double> g;
  double weight = 1.0;
  int component = 0;

  template <class T>
  void add(std::size_t i, const T& v) {
    g[i] += weight * component_of(v, component);
  }
  template <class T>
  void add_product(std::size_t i, const T& x, const T& y) {
    g[i] += weight * product_component(x, y, component);
  }
};

enum class InitKind { glorot, glorot_abs, zero, one };

struct TensorInfo {
  std::string name;
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 1;  // 1 for vectors
  bool is_vector = false;
  InitKind init = InitKind::glorot;
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;

  std::size_t size() const { return rows * cols; }
};

/// Affine map y = W x + b with W stored row-major, followed by b.
struct DenseShape {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t offset = 0;

  std::size_t weight(std::size_t r, std::size_t c) const { return offset + r * in + c; }
  std::size_t bias(std::size_t r) const { return offset + out * in + r; }
  std::size_t size() const { return out * (in + 1); }
};

/// Bias-free matrix (message-passing mixing weights).
struct MatrixShape {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;

  std::size_t at(std::size_t r, std::size_t c) const { return offset + r * cols + c; }
};

/// in -> hidden -> hidden -> out, squareplus after each hidden layer,
/// affine output.
struct MlpLayout {
  std::size_t in = 0;
  std::size_t hidden = 0;
  std::size_t out = 0;
  std::array<DenseShape, 3> layers{};
};

class LayoutBuilder {
 public:
  MlpLayout mlp(const std::string& name, std::size_t in, std::size_t hidden, std::size_t out) {
    MlpLayout m{in, hidden, out, {}};
    const std::array<std::size_t, 4> widths{in, hidden, hidden, out};
    for (std::size_t l = 0; l < 3; ++l) {
      DenseShape d{widths[l], widths[l + 1], cursor_};
      tensors_.push_back({name + ".w" + std::to_string(l), d.offset, d.out, d.in, false,
                          InitKind::glorot, d.in, d.out});
      tensors_.push_back({name + ".b" + std::to_string(l), d.offset + d.out * d.in, d.out, 1, true,
                          InitKind::zero, d.in, d.out});
      cursor_ += d.size();
      m.layers[l] = d;
    }
    return m;
  }

  MatrixShape matrix(const std::string& name, std::size_t rows, std::size_t cols) {
    MatrixShape m{rows, cols, cursor_};
    tensors_.push_back({name, cursor_, rows, cols, false, InitKind::glorot, cols, rows});
    cursor_ += rows * cols;
    return m;
  }

  /// A plain vector with constant initialisation.
  std::size_t vector(const std::string& name, std::size_t n, InitKind init) {
    const std::size_t off = cursor_;
    tensors_.push_back({name, off, n, 1, true, init, 0, 0});
    cursor_ += n;
    return off;
  }

  std::size_t size() const { return cursor_; }
  const std::vector<TensorInfo>& tensors() const { return tensors_; }

 private:
  std::size_t cursor_ = 0;
  std::vector<TensorInfo> tensors_;
};

/// Glorot-uniform weights (glorot_abs: their magnitudes), zero biases,
/// deterministic in `seed`.
inline Vec initialise_parameters(const std::vector<TensorInfo>& tensors, std::size_t total,
                                 std::uint64_t seed) {
  Vec p = Vec::Zero(static_cast<Eigen::Index>(total));
  Rng rng(seed);
  for (const auto& t : tensors) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      double v = 0.0;
      switch (t.init) {
        case InitKind::glorot:
        case InitKind::glorot_abs: {
          const double limit = std::sqrt(6.0 / static_cast<double>(t.fan_in + t.fan_out));
          v = rng.uniform(-limit, limit);
          if (t.init == InitKind::glorot_abs) v = std::abs(v);
          break;
        }
        case InitKind::zero: v = 0.0; break;
        case InitKind::one: v = 1.0; break;
      }
      p[static_cast<Eigen::Index>(t.offset + i)] = v;
    }
  }
  return p;
}

/// Evaluates one MLP on `count` inputs and keeps every activation for the
/// adjoint pass. Row k of the buffer is
/// [x | pre1 | act1 | pre2 | act2 | out].
template <class T>
class MlpBatch {
 public:
  MlpBatch() = default;
  MlpBatch(const MlpLayout& layout, std::size_t count) { reset(layout, count); }

  void reset(const MlpLayout& layout, std::size_t count) {
    layout_ = &layout;
    count_ = count;
    stride_ = layout.in + 4 * layout.hidden + layout.out;
    buf_.assign(count_ * stride_, T{});
  }

  std::size_t count() const { return count_; }
  const MlpLayout& layout() const { return *layout_; }

  std::span<T> input(std::size_t k) { return {row(k), layout_->in}; }
  std::span<const T> input(std::size_t k) const { return {row(k), layout_->in}; }
  std::span<const T> output(std::size_t k) const { return {row(k) + out_off(), layout_->out}; }

  void forward(std::span<const double> p) {
    const auto& L = *layout_;
    for (std::size_t k = 0; k < count_; ++k) {
      T* r = row(k);
      dense(p, L.layers[0], r, r + L.in);
      for (std::size_t i = 0; i < L.hidden; ++i) r[L.in + L.hidden + i] = squareplus(r[L.in + i]);
      dense(p, L.layers[1], r + L.in + L.hidden, r + L.in + 2 * L.hidden);
      for (std::size_t i = 0; i < L.hidden; ++i)
        r[L.in + 3 * L.hidden + i] = squareplus(r[L.in + 2 * L.hidden + i]);
      dense(p, L.layers[2], r + L.in + 3 * L.hidden, r + out_off());
    }
  }

  /// Adjoint pass. `out_adj` holds count*out adjoints; input adjoints are
  /// added into `in_adj` (count*in) when it is non-empty; parameter
  /// adjoints go to `sink` when it is non-null.
  void backward(std::span<const double> p, std::span<const T> out_adj, std::span<T> in_adj,
                GradSink* sink) const {
    const auto& L = *layout_;
    std::vector<T> g2(L.hidden), g1(L.hidden);
    for (std::size_t k = 0; k < count_; ++k) {
      const T* r = row(k);
      const T* x = r;
      const T* pre1 = r + L.in;
      const T* act1 = r + L.in + L.hidden;
      const T* pre2 = r + L.in + 2 * L.hidden;
      const T* act2 = r + L.in + 3 * L.hidden;
      const T* go = out_adj.data() + k * L.out;

      // output layer
      std::fill(g2.begin(), g2.end(), T{});
      dense_adjoint(p, L.layers[2], act2, go, g2.data(), sink);
      for (std::size_t i = 0; i < L.hidden; ++i) g2[i] = g2[i] * squareplus_d1(pre2[i]);

      std::fill(g1.begin(), g1.end(), T{});
      dense_adjoint(p, L.layers[1], act1, g2.data(), g1.data(), sink);
      for (std::size_t i = 0; i < L.hidden; ++i) g1[i] = g1[i] * squareplus_d1(pre1[i]);

      T* gx = in_adj.empty() ? nullptr : in_adj.data() + k * L.in;
      dense_adjoint(p, L.layers[0], x, g1.data(), gx, sink);
    }
  }

 private:
  std::size_t out_off() const { return layout_->in + 4 * layout_->hidden; }
  T* row(std::size_t k) { return buf_.data() + k * stride_; }
  const T* row(std::size_t k) const { return buf_.data() + k * stride_; }

  static void dense(std::span<const double> p, const DenseShape& d, const T* x, T* y) {
    const double* w = p.data() + d.offset;
    const double* b = p.data() + d.offset + d.out * d.in;
    for (std::size_t r = 0; r < d.out; ++r) {
      T acc = T{b[r]};
      const double* wr = w + r * d.in;
      for (std::size_t c = 0; c < d.in; ++c) acc += wr[c] * x[c];
      y[r] = acc;
    }
  }

  // gy: adjoint of the layer output; gx (may be null) receives W^T gy.
  static void dense_adjoint(std::span<const double> p, const DenseShape& d, const T* x,
                            const T* gy, T* gx, GradSink* sink) {
    const double* w = p.data() + d.offset;
    if (gx) {
      for (std::size_t r = 0; r < d.out; ++r) {
        const double* wr = w + r * d.in;
        for (std::size_t c = 0; c < d.in; ++c) gx[c] += wr[c] * gy[r];
      }
    }
    if (sink) {
      for (std::size_t r = 0; r < d.out; ++r) {
        for (std::size_t c = 0; c < d.in; ++c) sink->add_product(d.weight(r, c), gy[r], x[c]);
        sink->add(d.bias(r), gy[r]);
      }
    }
  }

  const MlpLayout* layout_ = nullptr;
  std::size_t count_ = 0;
  std::size_t stride_ = 0;
  std::vector<T> buf_;
};

/// Single-input convenience wrapper (value only).
inline Vec mlp_forward(const MlpLayout& layout, std::span<const double> params, const Vec& x) {
  if (static_cast<std::size_t>(x.size()) != layout.in)
    throw ValidationError("mlp_forward: input length " + std::to_string(x.size()) +
                          " does not match layer width " + std::to_string(layout.in));
  MlpBatch<double> batch(layout, 1);
  auto in = batch.input(0);
  for (std::size_t i = 0; i < layout.in; ++i) in[i] = x[static_cast<Eigen::Index>(i)];
  batch.forward(params);
  Vec out(static_cast<Eigen::Index>(layout.out));
  auto o = batch.output(0);
  for (std::size_t i = 0; i < layout.out; ++i) out[static_cast<Eigen::Index>(i)] = o[i];
  return out;
}

}  // namespace lgnn
