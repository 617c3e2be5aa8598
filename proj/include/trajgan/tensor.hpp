#pragma once
// Dense tensors with reverse-mode automatic differentiation, just enough to
// express 1D-convolutional GANs. Graphs are define-by-run: every operation
// records its inputs and a backward closure on the output node, and
// ComputeGraph::build topologically sorts the nodes reachable from a scalar
// output so the backward sweep visits each node exactly once.
//
// Templated on the element type: models train in float, and the same code
// instantiates with double for high-precision gradient checking. Reductions
// always accumulate in double via the kernel layer.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "trajgan/kernels.hpp"

namespace trajgan {

using Shape = std::vector<std::int64_t>;

inline std::int64_t numel(const Shape& s) {
  std::int64_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename T>
struct TensorNode {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // allocated on demand during backward
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  // Owned by this node, so it must never capture a shared_ptr to this node:
  // that is a reference cycle and the whole graph leaks. Ops capture the
  // output node as a raw pointer instead, which stays valid for as long as
  // the closure itself exists. Parent shared_ptrs are fine (edges only point
  // backward through the DAG).
  std::function<void()> backward_fn;

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), T(0));
  }
  void zero_grad() {
    if (!grad.empty()) std::fill(grad.begin(), grad.end(), T(0));
  }
};

template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorNode<T>> n) : node_(std::move(n)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    return filled(std::move(shape), T(0), requires_grad);
  }

  static Tensor filled(Shape shape, T value, bool requires_grad = false) {
    auto n = std::make_shared<TensorNode<T>>();
    n->data.assign(std::size_t(numel(shape)), value);
    n->shape = std::move(shape);
    n->requires_grad = requires_grad;
    return Tensor(n);
  }

  static Tensor from(Shape shape, std::vector<T> values,
                     bool requires_grad = false) {
    if (std::int64_t(values.size()) != numel(shape))
      throw ShapeError("tensor data length " + std::to_string(values.size()) +
                       " does not match shape " + shape_str(shape));
    auto n = std::make_shared<TensorNode<T>>();
    n->shape = std::move(shape);
    n->data = std::move(values);
    n->requires_grad = requires_grad;
    return Tensor(n);
  }

  static Tensor scalar(T value, bool requires_grad = false) {
    return from({1}, {value}, requires_grad);
  }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::int64_t size() const { return std::int64_t(node_->data.size()); }
  std::vector<T>& data() { return node_->data; }
  const std::vector<T>& data() const { return node_->data; }
  const std::vector<T>& grad() const { return node_->grad; }
  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool v) { node_->requires_grad = v; }
  std::shared_ptr<TensorNode<T>> node() const { return node_; }

  // Copy of the values as a fresh leaf outside any graph.
  Tensor detach() const {
    auto n = std::make_shared<TensorNode<T>>();
    n->shape = node_->shape;
    n->data = node_->data;
    n->requires_grad = false;
    return Tensor(n);
  }

 private:
  std::shared_ptr<TensorNode<T>> node_;
};

namespace detail {

template <typename T>
Tensor<T> make_result(Shape shape, std::vector<std::shared_ptr<TensorNode<T>>> parents) {
  auto n = std::make_shared<TensorNode<T>>();
  n->data.assign(std::size_t(numel(shape)), T(0));
  n->shape = std::move(shape);
  for (auto& p : parents)
    if (p->requires_grad) n->requires_grad = true;
  n->parents = std::move(parents);
  return Tensor<T>(n);
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b,
                        const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise ops

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a, b, "add");
  auto out = detail::make_result<T>(a.shape(), {a.node(), b.node()});
  kern::add(a.data().data(), b.data().data(), out.data().data(),
            out.data().size());
  auto an = a.node();
  auto bn = b.node();
  auto* on = out.node().get();
  out.node()->backward_fn = [an, bn, on] {
    if (an->requires_grad) {
      an->ensure_grad();
      kern::axpy(T(1), on->grad.data(), an->grad.data(), on->grad.size());
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      kern::axpy(T(1), on->grad.data(), bn->grad.data(), on->grad.size());
    }
  };
  return out;
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a, b, "sub");
  auto out = detail::make_result<T>(a.shape(), {a.node(), b.node()});
  kern::sub(a.data().data(), b.data().data(), out.data().data(),
            out.data().size());
  auto an = a.node();
  auto bn = b.node();
  auto* on = out.node().get();
  out.node()->backward_fn = [an, bn, on] {
    if (an->requires_grad) {
      an->ensure_grad();
      kern::axpy(T(1), on->grad.data(), an->grad.data(), on->grad.size());
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      kern::axpy(T(-1), on->grad.data(), bn->grad.data(), on->grad.size());
    }
  };
  return out;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a, b, "mul");
  auto out = detail::make_result<T>(a.shape(), {a.node(), b.node()});
  kern::mul(a.data().data(), b.data().data(), out.data().data(),
            out.data().size());
  auto an = a.node();
  auto bn = b.node();
  auto* on = out.node().get();
  out.node()->backward_fn = [an, bn, on] {
    const std::size_t n = on->grad.size();
    if (an->requires_grad) {
      an->ensure_grad();
      for (std::size_t i = 0; i < n; ++i)
        an->grad[i] += on->grad[i] * bn->data[i];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (std::size_t i = 0; i < n; ++i)
        bn->grad[i] += on->grad[i] * an->data[i];
    }
  };
  return out;
}

template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& a, T c) {
  auto out = detail::make_result<T>(a.shape(), {a.node()});
  kern::scale(a.data().data(), c, out.data().data(), out.data().size());
  auto an = a.node();
  auto* on = out.node().get();
  out.node()->backward_fn = [an, on, c] {
    if (!an->requires_grad) return;
    an->ensure_grad();
    kern::axpy(c, on->grad.data(), an->grad.data(), on->grad.size());
  };
  return out;
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T c) {
  auto out = detail::make_result<T>(a.shape(), {a.node()});
  for (std::size_t i = 0; i < a.data().size(); ++i)
    out.data()[i] = a.data()[i] + c;
  auto an = a.node();
  auto* on = out.node().get();
  out.node()->backward_fn = [an, on] {
    if (!an->requires_grad) return;
    an->ensure_grad();
    kern::axpy(T(1), on->grad.data(), an->grad.data(), on->grad.size());
  };
  return out;
}

template <typename T>
Tensor<T> abs_val(const Tensor<T>& a) {
  auto out = detail::make_result<T>(a.shape(), {a.node()});
  for (std::size_t i = 0; i < a.data().size(); ++i)
    out.data()[i] = a.data()[i] < T(0) ? -a.data()[i] : a.data()[i];
  auto an = a.node();
  auto* on = out.node().get();
  out.node()->backward_fn = [an, on] {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (std::size_t i = 0; i < on->grad.size(); ++i) {
      if (an->data[i] > T(0))
        an->grad[i] += on->grad[i];
      else if (an->data[i] < T(0))
        an->grad[i] -= on->grad[i];
    }
  };
  return out;
}

// sqrt(x + shift); shift keeps the derivative finite at x = 0.
template <typename T>
Tensor<T> sqrt_shifted(const Tensor<T>& a, T shift) {
  auto out = detail::make_result<T>(a.shape(), {a.node()});
  for (std::size_t i = 0; i < a.data().size(); ++i)
    out.data()[i] = std::sqrt(a.data()[i] + shift);
  auto an = a.node();
  auto* on = out.node().get();
  out.node()->backward_fn = [an, on] {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (std::size_t i = 0; i < on->grad.size(); ++i)
      an->grad[i] += on->grad[i] / (T(2) * on->data[i]);
  };
  return out;
}

template <typename T>
Tensor<T> square(const Tensor<T>& a) {
  auto out = detail::make_result<T>(a.shape(), {a.node()});
  kern::mul(a.data().data(), a.data().data(), out.data().data(),
            out.data().size());
  auto an = a.node();
  auto* on = out.node().get();
  out.node()->backward_fn = [an, on] {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (std::size_t i = 0; i < on->grad.size(); ++i)
      an->grad[i] += T(2) * an->data[i] * on->grad[i];
  };
  return out;
}

// ---------------------------------------------------------------------------
// activations

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
  auto out = detail::make_result<T>(a.shape(), {a.node()});
  kern::relu(a.data().data(), out.data().data(), out.data().size());
  auto an = a.node();
  auto* on = out.node().get();
  out.node()->backward_fn = [an, on] {
    if (!an->requires_grad) return;
    an->ensure_grad();
    kern::relu_grad_acc(an->data.data(), on->grad.data(), an->grad.data(),
                        on->grad.size());
  };
  return out;
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& a, T slope) {
  auto out = detail::make_result<T>(a.shape(), {a.node()});
  kern::leaky_relu(a.data().data(), slope, out.data().data(),
                   out.data().size());
  auto an = a.node();
  auto* on = out.node().get();
  out.node()->backward_fn = [an, on, slope] {
    if (!an->requires_grad) return;
    an->ensure_grad();
    kern::leaky_relu_grad_acc(an->data.data(), slope, on->grad.data(),
                              an->grad.data(), on->grad.size());
  };
  return out;
}

template <typename T>
Tensor<T> tanh_act(const Tensor<T>& a) {
  auto out = detail::make_result<T>(a.shape(), {a.node()});
  for (std::size_t i = 0; i < a.data().size(); ++i)
    out.data()[i] = std::tanh(a.data()[i]);
  auto an = a.node();
  auto* on = out.node().get();
  out.node()->backward_fn = [an, on] {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (std::size_t i = 0; i < on->grad.size(); ++i)
      an->grad[i] += on->grad[i] * (T(1) - on->data[i] * on->data[i]);
  };
  return out;
}

// ---------------------------------------------------------------------------
// reductions and reshape

template <typename T>
Tensor<T> sum_all(const Tensor<T>& a) {
  auto out = detail::make_result<T>({1}, {a.node()});
  out.data()[0] = T(kern::sum(a.data().data(), a.data().size()));
  auto an = a.node();
  auto* on = out.node().get();
  out.node()->backward_fn = [an, on] {
    if (!an->requires_grad) return;
    an->ensure_grad();
    const T g = on->grad[0];
    for (std::size_t i = 0; i < an->grad.size(); ++i) an->grad[i] += g;
  };
  return out;
}

template <typename T>
Tensor<T> mean_all(const Tensor<T>& a) {
  const T inv = T(1) / T(a.data().size());
  auto out = detail::make_result<T>({1}, {a.node()});
  out.data()[0] = T(kern::sum(a.data().data(), a.data().size()) /
                    double(a.data().size()));
  auto an = a.node();
  auto* on = out.node().get();
  out.node()->backward_fn = [an, on, inv] {
    if (!an->requires_grad) return;
    an->ensure_grad();
    const T g = on->grad[0] * inv;
    for (std::size_t i = 0; i < an->grad.size(); ++i) an->grad[i] += g;
  };
  return out;
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape new_shape) {
  if (numel(new_shape) != numel(a.shape()))
    throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " +
                     shape_str(new_shape));
  auto out = detail::make_result<T>(std::move(new_shape), {a.node()});
  out.data() = a.data();
  auto an = a.node();
  auto* on = out.node().get();
  out.node()->backward_fn = [an, on] {
    if (!an->requires_grad) return;
    an->ensure_grad();
    kern::axpy(T(1), on->grad.data(), an->grad.data(), on->grad.size());
  };
  return out;
}

// ---------------------------------------------------------------------------
// dense layer

template <typename T>
Tensor<T> dense(const Tensor<T>& x, const Tensor<T>& W, const Tensor<T>& b) {
  if (x.shape().size() != 2 || W.shape().size() != 2 || b.shape().size() != 1)
    throw ShapeError("dense: expected x[B,m], W[m,n], b[n], got x=" +
                     shape_str(x.shape()) + " W=" + shape_str(W.shape()) +
                     " b=" + shape_str(b.shape()));
  const std::int64_t B = x.shape()[0], m = x.shape()[1];
  const std::int64_t mw = W.shape()[0], n = W.shape()[1];
  if (m != mw || b.shape()[0] != n)
    throw ShapeError("dense: shape mismatch x=" + shape_str(x.shape()) +
                     " W=" + shape_str(W.shape()) + " b=" +
                     shape_str(b.shape()));
  auto out = detail::make_result<T>({B, n}, {x.node(), W.node(), b.node()});
  const T* xd = x.data().data();
  const T* wd = W.data().data();
  const T* bd = b.data().data();
  T* od = out.data().data();
  for (std::int64_t i = 0; i < B; ++i) {
    T* orow = od + i * n;
    for (std::int64_t j = 0; j < n; ++j) orow[j] = bd[j];
    for (std::int64_t k = 0; k < m; ++k)
      kern::axpy(xd[i * m + k], wd + k * n, orow, std::size_t(n));
  }
  auto xn = x.node();
  auto wn = W.node();
  auto bn = b.node();
  auto* on = out.node().get();
  out.node()->backward_fn = [xn, wn, bn, on, B, m, n] {
    const T* g = on->grad.data();
    if (xn->requires_grad) {
      xn->ensure_grad();
      for (std::int64_t i = 0; i < B; ++i)
        for (std::int64_t k = 0; k < m; ++k)
          xn->grad[i * m + k] +=
              T(kern::dot(g + i * n, wn->data.data() + k * n, std::size_t(n)));
    }
    if (wn->requires_grad) {
      wn->ensure_grad();
      for (std::int64_t i = 0; i < B; ++i)
        for (std::int64_t k = 0; k < m; ++k)
          kern::axpy(xn->data[i * m + k], g + i * n, wn->grad.data() + k * n,
                     std::size_t(n));
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (std::int64_t i = 0; i < B; ++i)
        kern::axpy(T(1), g + i * n, bn->grad.data(), std::size_t(n));
    }
  };
  return out;
}

// ---------------------------------------------------------------------------
// 1D convolution (cross-correlation, no kernel flip)

inline std::int64_t conv1d_out_len(std::int64_t L, std::int64_t K,
                                   std::int64_t stride, std::int64_t padding) {
  return (L + 2 * padding - K) / stride + 1;
}

template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& k, std::int64_t stride,
                 std::int64_t padding) {
  if (x.shape().size() != 3 || k.shape().size() != 3)
    throw ShapeError("conv1d: expected x[B,C_in,L], k[C_out,C_in,K], got x=" +
                     shape_str(x.shape()) + " k=" + shape_str(k.shape()));
  const std::int64_t B = x.shape()[0], Ci = x.shape()[1], L = x.shape()[2];
  const std::int64_t Co = k.shape()[0], Cik = k.shape()[1], K = k.shape()[2];
  if (Ci != Cik)
    throw ShapeError("conv1d: channel mismatch x=" + shape_str(x.shape()) +
                     " k=" + shape_str(k.shape()));
  if (stride < 1) throw ShapeError("conv1d: stride must be >= 1");
  if (K > L + 2 * padding)
    throw ShapeError("conv1d: kernel size " + std::to_string(K) +
                     " exceeds padded length " +
                     std::to_string(L + 2 * padding));
  const std::int64_t Lo = conv1d_out_len(L, K, stride, padding);
  auto out = detail::make_result<T>({B, Co, Lo}, {x.node(), k.node()});
  const T* xd = x.data().data();
  const T* kd = k.data().data();
  T* od = out.data().data();
  for (std::int64_t b = 0; b < B; ++b)
    for (std::int64_t co = 0; co < Co; ++co) {
      T* orow = od + (b * Co + co) * Lo;
      for (std::int64_t ci = 0; ci < Ci; ++ci) {
        const T* xrow = xd + (b * Ci + ci) * L;
        for (std::int64_t kk = 0; kk < K; ++kk) {
          const T w = kd[(co * Ci + ci) * K + kk];
          if (w == T(0)) continue;
          const std::int64_t off = kk - padding;
          if (stride == 1) {
            const std::int64_t t0 = off < 0 ? -off : 0;
            const std::int64_t t1 = std::min(Lo - 1, L - 1 - off);
            if (t0 <= t1)
              kern::axpy(w, xrow + t0 + off, orow + t0, std::size_t(t1 - t0 + 1));
          } else {
            for (std::int64_t t = 0; t < Lo; ++t) {
              const std::int64_t pos = t * stride + off;
              if (pos >= 0 && pos < L) orow[t] += w * xrow[pos];
            }
          }
        }
      }
    }
  auto xn = x.node();
  auto kn = k.node();
  auto* on = out.node().get();
  out.node()->backward_fn = [xn, kn, on, B, Ci, L, Co, K, Lo, stride, padding] {
    const T* g = on->grad.data();
    if (xn->requires_grad) xn->ensure_grad();
    if (kn->requires_grad) kn->ensure_grad();
    for (std::int64_t b = 0; b < B; ++b)
      for (std::int64_t co = 0; co < Co; ++co) {
        const T* grow = g + (b * Co + co) * Lo;
        for (std::int64_t ci = 0; ci < Ci; ++ci) {
          const T* xrow = xn->data.data() + (b * Ci + ci) * L;
          T* dxrow =
              xn->requires_grad ? xn->grad.data() + (b * Ci + ci) * L : nullptr;
          for (std::int64_t kk = 0; kk < K; ++kk) {
            const std::int64_t off = kk - padding;
            const std::int64_t widx = (co * Ci + ci) * K + kk;
            if (stride == 1) {
              const std::int64_t t0 = off < 0 ? -off : 0;
              const std::int64_t t1 = std::min(Lo - 1, L - 1 - off);
              if (t0 > t1) continue;
              const std::size_t len = std::size_t(t1 - t0 + 1);
              if (dxrow)
                kern::axpy(kn->data[widx], grow + t0, dxrow + t0 + off, len);
              if (kn->requires_grad)
                kn->grad[widx] += T(kern::dot(grow + t0, xrow + t0 + off, len));
            } else {
              for (std::int64_t t = 0; t < Lo; ++t) {
                const std::int64_t pos = t * stride + off;
                if (pos < 0 || pos >= L) continue;
                if (dxrow) dxrow[pos] += kn->data[widx] * grow[t];
                if (kn->requires_grad) kn->grad[widx] += grow[t] * xrow[pos];
              }
            }
          }
        }
      }
  };
  return out;
}

// ---------------------------------------------------------------------------
// transposed 1D convolution; adjoint of conv1d with the kernel laid out as
// k[C_in,C_out,K]

template <typename T>
Tensor<T> conv_transpose1d(const Tensor<T>& x, const Tensor<T>& k,
                           std::int64_t stride, std::int64_t padding) {
  if (x.shape().size() != 3 || k.shape().size() != 3)
    throw ShapeError(
        "conv_transpose1d: expected x[B,C_in,L], k[C_in,C_out,K], got x=" +
        shape_str(x.shape()) + " k=" + shape_str(k.shape()));
  const std::int64_t B = x.shape()[0], Ci = x.shape()[1], L = x.shape()[2];
  const std::int64_t Cik = k.shape()[0], Co = k.shape()[1], K = k.shape()[2];
  if (Ci != Cik)
    throw ShapeError("conv_transpose1d: channel mismatch x=" +
                     shape_str(x.shape()) + " k=" + shape_str(k.shape()));
  if (stride < 1) throw ShapeError("conv_transpose1d: stride must be >= 1");
  const std::int64_t Lo = (L - 1) * stride + K - 2 * padding;
  if (Lo <= 0)
    throw ShapeError("conv_transpose1d: output length " + std::to_string(Lo) +
                     " is not positive");
  auto out = detail::make_result<T>({B, Co, Lo}, {x.node(), k.node()});
  const T* xd = x.data().data();
  const T* kd = k.data().data();
  T* od = out.data().data();
  for (std::int64_t b = 0; b < B; ++b)
    for (std::int64_t ci = 0; ci < Ci; ++ci) {
      const T* xrow = xd + (b * Ci + ci) * L;
      for (std::int64_t co = 0; co < Co; ++co) {
        T* orow = od + (b * Co + co) * Lo;
        for (std::int64_t kk = 0; kk < K; ++kk) {
          const T w = kd[(ci * Co + co) * K + kk];
          if (w == T(0)) continue;
          const std::int64_t off = kk - padding;
          if (stride == 1) {
            const std::int64_t t0 = off < 0 ? -off : 0;
            const std::int64_t t1 = std::min(L - 1, Lo - 1 - off);
            if (t0 <= t1)
              kern::axpy(w, xrow + t0, orow + t0 + off, std::size_t(t1 - t0 + 1));
          } else {
            for (std::int64_t t = 0; t < L; ++t) {
              const std::int64_t pos = t * stride + off;
              if (pos >= 0 && pos < Lo) orow[pos] += w * xrow[t];
            }
          }
        }
      }
    }
  auto xn = x.node();
  auto kn = k.node();
  auto* on = out.node().get();
  out.node()->backward_fn = [xn, kn, on, B, Ci, L, Co, K, Lo, stride, padding] {
    const T* g = on->grad.data();
    if (xn->requires_grad) xn->ensure_grad();
    if (kn->requires_grad) kn->ensure_grad();
    for (std::int64_t b = 0; b < B; ++b)
      for (std::int64_t ci = 0; ci < Ci; ++ci) {
        const T* xrow = xn->data.data() + (b * Ci + ci) * L;
        T* dxrow =
            xn->requires_grad ? xn->grad.data() + (b * Ci + ci) * L : nullptr;
        for (std::int64_t co = 0; co < Co; ++co) {
          const T* grow = g + (b * Co + co) * Lo;
          for (std::int64_t kk = 0; kk < K; ++kk) {
            const std::int64_t off = kk - padding;
            const std::int64_t widx = (ci * Co + co) * K + kk;
            if (stride == 1) {
              const std::int64_t t0 = off < 0 ? -off : 0;
              const std::int64_t t1 = std::min(L - 1, Lo - 1 - off);
              if (t0 > t1) continue;
              const std::size_t len = std::size_t(t1 - t0 + 1);
              if (dxrow)
                kern::axpy(kn->data[widx], grow + t0 + off, dxrow + t0, len);
              if (kn->requires_grad)
                kn->grad[widx] += T(kern::dot(xrow + t0, grow + t0 + off, len));
            } else {
              for (std::int64_t t = 0; t < L; ++t) {
                const std::int64_t pos = t * stride + off;
                if (pos < 0 || pos >= Lo) continue;
                if (dxrow) dxrow[t] += kn->data[widx] * grow[pos];
                if (kn->requires_grad) kn->grad[widx] += xrow[t] * grow[pos];
              }
            }
          }
        }
      }
  };
  return out;
}

// Adds b[c] to every (batch, position) element of channel c.
template <typename T>
Tensor<T> bias_add_channel(const Tensor<T>& x, const Tensor<T>& b) {
  if (x.shape().size() != 3 || b.shape().size() != 1 ||
      b.shape()[0] != x.shape()[1])
    throw ShapeError("bias_add_channel: expected x[B,C,L], b[C], got x=" +
                     shape_str(x.shape()) + " b=" + shape_str(b.shape()));
  const std::int64_t B = x.shape()[0], C = x.shape()[1], L = x.shape()[2];
  auto out = detail::make_result<T>(x.shape(), {x.node(), b.node()});
  for (std::int64_t bi = 0; bi < B; ++bi)
    for (std::int64_t c = 0; c < C; ++c) {
      const T* xrow = x.data().data() + (bi * C + c) * L;
      T* orow = out.data().data() + (bi * C + c) * L;
      const T bc = b.data()[c];
      for (std::int64_t t = 0; t < L; ++t) orow[t] = xrow[t] + bc;
    }
  auto xn = x.node();
  auto bn = b.node();
  auto* on = out.node().get();
  out.node()->backward_fn = [xn, bn, on, B, C, L] {
    if (xn->requires_grad) {
      xn->ensure_grad();
      kern::axpy(T(1), on->grad.data(), xn->grad.data(), on->grad.size());
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (std::int64_t bi = 0; bi < B; ++bi)
        for (std::int64_t c = 0; c < C; ++c)
          bn->grad[c] += T(kern::sum(
              on->grad.data() + (bi * C + c) * L, std::size_t(L)));
    }
  };
  return out;
}

// ---------------------------------------------------------------------------
// batch normalization over (B, L) per channel

enum class BnMode { train, eval };

template <typename T>
struct RunningStats {
  std::vector<T> mean;
  std::vector<T> var;
  explicit RunningStats(std::int64_t channels = 0)
      : mean(std::size_t(channels), T(0)), var(std::size_t(channels), T(1)) {}
};

template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma,
                     const Tensor<T>& beta, T eps, BnMode mode,
                     RunningStats<T>& running, T momentum = T(0.1)) {
  if (x.shape().size() != 3)
    throw ShapeError("batch_norm: expected x[B,C,L], got " +
                     shape_str(x.shape()));
  const std::int64_t B = x.shape()[0], C = x.shape()[1], L = x.shape()[2];
  if (gamma.shape() != Shape{C} || beta.shape() != Shape{C} ||
      std::int64_t(running.mean.size()) != C)
    throw ShapeError("batch_norm: parameter shapes do not match channels=" +
                     std::to_string(C));
  const std::int64_t N = B * L;
  if (mode == BnMode::train && N < 2)
    throw ShapeError("batch_norm: degenerate batch, B*L=" + std::to_string(N) +
                     " < 2 in train mode");
  auto out = detail::make_result<T>(x.shape(),
                                    {x.node(), gamma.node(), beta.node()});
  const T* xd = x.data().data();
  T* od = out.data().data();

  std::vector<T> mean_c(static_cast<std::size_t>(C));
  std::vector<T> inv_std_c(static_cast<std::size_t>(C));
  if (mode == BnMode::train) {
    for (std::int64_t c = 0; c < C; ++c) {
      double s = 0.0;
      for (std::int64_t b = 0; b < B; ++b)
        s += kern::sum(xd + (b * C + c) * L, std::size_t(L));
      const double mu = s / double(N);
      double sq = 0.0;
      for (std::int64_t b = 0; b < B; ++b)
        sq += kern::sq_dev_sum(xd + (b * C + c) * L, T(mu), std::size_t(L));
      const double var = sq / double(N);
      mean_c[c] = T(mu);
      inv_std_c[c] = T(1.0 / std::sqrt(var + double(eps)));
      const double unbiased = N > 1 ? sq / double(N - 1) : var;
      running.mean[c] = (T(1) - momentum) * running.mean[c] + momentum * T(mu);
      running.var[c] =
          (T(1) - momentum) * running.var[c] + momentum * T(unbiased);
    }
  } else {
    for (std::int64_t c = 0; c < C; ++c) {
      mean_c[c] = running.mean[c];
      inv_std_c[c] = T(1.0 / std::sqrt(double(running.var[c]) + double(eps)));
    }
  }

  // xhat is saved for the backward pass
  auto xhat = std::make_shared<std::vector<T>>(x.data().size());
  for (std::int64_t b = 0; b < B; ++b)
    for (std::int64_t c = 0; c < C; ++c) {
      const T* xrow = xd + (b * C + c) * L;
      T* hrow = xhat->data() + (b * C + c) * L;
      T* orow = od + (b * C + c) * L;
      const T mu = mean_c[c], is = inv_std_c[c];
      const T g = gamma.data()[c], be = beta.data()[c];
      for (std::int64_t t = 0; t < L; ++t) {
        hrow[t] = (xrow[t] - mu) * is;
        orow[t] = g * hrow[t] + be;
      }
    }

  auto xn = x.node();
  auto gn = gamma.node();
  auto bn = beta.node();
  auto* on = out.node().get();
  auto inv_std = std::make_shared<std::vector<T>>(inv_std_c);
  out.node()->backward_fn = [xn, gn, bn, on, xhat, inv_std, B, C, L, N, mode] {
    const T* g = on->grad.data();
    if (gn->requires_grad) gn->ensure_grad();
    if (bn->requires_grad) bn->ensure_grad();
    if (xn->requires_grad) xn->ensure_grad();
    for (std::int64_t c = 0; c < C; ++c) {
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      for (std::int64_t b = 0; b < B; ++b) {
        const T* grow = g + (b * C + c) * L;
        const T* hrow = xhat->data() + (b * C + c) * L;
        sum_dy += kern::sum(grow, std::size_t(L));
        sum_dy_xhat += kern::dot(grow, hrow, std::size_t(L));
      }
      if (bn->requires_grad) bn->grad[c] += T(sum_dy);
      if (gn->requires_grad) gn->grad[c] += T(sum_dy_xhat);
      if (!xn->requires_grad) continue;
      const T gam = gn->data[c], is = (*inv_std)[c];
      if (mode == BnMode::train) {
        const T k1 = gam * is / T(N);
        const T m_dy = T(sum_dy);
        const T m_dy_xhat = T(sum_dy_xhat);
        for (std::int64_t b = 0; b < B; ++b) {
          const T* grow = g + (b * C + c) * L;
          const T* hrow = xhat->data() + (b * C + c) * L;
          T* dxrow = xn->grad.data() + (b * C + c) * L;
          for (std::int64_t t = 0; t < L; ++t)
            dxrow[t] += k1 * (T(N) * grow[t] - m_dy - hrow[t] * m_dy_xhat);
        }
      } else {
        for (std::int64_t b = 0; b < B; ++b)
          kern::axpy(gam * is, g + (b * C + c) * L,
                     xn->grad.data() + (b * C + c) * L, std::size_t(L));
      }
    }
  };
  return out;
}

// ---------------------------------------------------------------------------
// backward pass

template <typename T>
struct ComputeGraph {
  // Topological order: every node's inputs precede it.
  std::vector<std::shared_ptr<TensorNode<T>>> nodes;
  std::shared_ptr<TensorNode<T>> output;

  static ComputeGraph build(const Tensor<T>& out) {
    ComputeGraph g;
    g.output = out.node();
    std::unordered_set<TensorNode<T>*> seen;
    // iterative post-order DFS
    std::vector<std::pair<std::shared_ptr<TensorNode<T>>, std::size_t>> stack;
    stack.emplace_back(g.output, 0);
    seen.insert(g.output.get());
    while (!stack.empty()) {
      auto& [node, next_child] = stack.back();
      if (next_child < node->parents.size()) {
        auto child = node->parents[next_child++];
        if (seen.insert(child.get()).second) stack.emplace_back(child, 0);
      } else {
        g.nodes.push_back(node);
        stack.pop_back();
      }
    }
    return g;
  }

  // Seeds d(output)/d(output) = 1 and sweeps the graph in reverse
  // topological order, visiting each node exactly once. All grads in the
  // graph are reset first, so leaf gradients are those of this output only.
  void backward() {
    if (output->data.size() != 1)
      throw ShapeError("backward: output must be scalar, got shape " +
                       shape_str(output->shape));
    for (auto& n : nodes) {
      n->zero_grad();
      if (n->requires_grad) n->ensure_grad();
    }
    output->ensure_grad();
    output->grad[0] = T(1);
    for (auto it = nodes.rbegin(); it != nodes.rend(); ++it)
      if ((*it)->backward_fn && (*it)->requires_grad) (*it)->backward_fn();
  }
};

template <typename T>
void backward(const Tensor<T>& out) {
  ComputeGraph<T>::build(out).backward();
}

// ---------------------------------------------------------------------------
// gradient checking

// Max over coordinates of |analytic - central difference| / max(1, |analytic|).
template <typename T>
double finite_difference_check(
    const std::function<Tensor<T>(const Tensor<T>&)>& f, const Tensor<T>& x,
    T eps) {
  Tensor<T> leaf = x.detach();
  leaf.set_requires_grad(true);
  backward(f(leaf));
  std::vector<T> analytic = leaf.node()->grad;

  double max_err = 0.0;
  for (std::size_t i = 0; i < leaf.data().size(); ++i) {
    const T orig = leaf.data()[i];
    leaf.data()[i] = orig + eps;
    const double fp = double(f(leaf).data()[0]);
    leaf.data()[i] = orig - eps;
    const double fm = double(f(leaf).data()[0]);
    leaf.data()[i] = orig;
    const double numeric = (fp - fm) / (2.0 * double(eps));
    const double a = double(analytic[i]);
    const double err = std::abs(a - numeric) / std::max(1.0, std::abs(a));
    if (err > max_err) max_err = err;
  }
  return max_err;
}

}  // namespace trajgan
