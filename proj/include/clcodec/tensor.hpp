#ifndef CLCODEC_TENSOR_HPP
#define CLCODEC_TENSOR_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <unordered_set>
#include <vector>

#include "clcodec/errors.hpp"
#include "clcodec/rng.hpp"

namespace clc {

using Shape = std::vector<int64_t>;

inline int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

namespace detail {

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // allocated on demand, same length as value
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  int64_t numel() const { return static_cast<int64_t>(value.size()); }
  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
  }
};

inline bool& grad_mode_ref() {
  thread_local bool enabled = true;
  return enabled;
}

}  // namespace detail

// Disables tape construction in scope (inference paths).
struct NoGradGuard {
  bool prev;
  NoGradGuard() : prev(detail::grad_mode_ref()) { detail::grad_mode_ref() = false; }
  ~NoGradGuard() { detail::grad_mode_ref() = prev; }
};

inline bool grad_enabled() { return detail::grad_mode_ref(); }

template <typename T>
void ensure_finite(const std::vector<T>& v, const char* op) {
  for (T x : v) {
    if (!std::isfinite(static_cast<double>(x)))
      throw NumericError(std::string("non-finite value produced by ") + op);
  }
}

// Value-semantics handle onto a tape node. Values are immutable once produced
// by an op; only leaf tensors (parameters, inputs under perturbation) may be
// mutated through data().
template <typename T>
class Tensor {
 public:
  using NodeT = detail::Node<T>;

  Tensor() = default;
  explicit Tensor(std::shared_ptr<NodeT> n) : node_(std::move(n)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    return filled(std::move(shape), T(0), requires_grad);
  }

  static Tensor filled(Shape shape, T v, bool requires_grad = false) {
    auto n = std::make_shared<NodeT>();
    n->shape = std::move(shape);
    n->value.assign(static_cast<size_t>(shape_numel(n->shape)), v);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
  }

  static Tensor from_vector(Shape shape, std::vector<T> v, bool requires_grad = false) {
    if (shape_numel(shape) != static_cast<int64_t>(v.size()))
      throw DimensionError("tensor data does not match shape " + shape_str(shape));
    auto n = std::make_shared<NodeT>();
    n->shape = std::move(shape);
    n->value = std::move(v);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
  }

  static Tensor scalar(T v) { return filled({1}, v); }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int64_t numel() const { return node_->numel(); }
  int64_t dim(int i) const { return node_->shape[static_cast<size_t>(i)]; }
  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool b) { node_->requires_grad = b; }

  std::vector<T>& data() { return node_->value; }
  const std::vector<T>& data() const { return node_->value; }
  std::vector<T>& grad() { return node_->grad; }
  const std::vector<T>& grad() const { return node_->grad; }
  void zero_grad() { node_->grad.assign(node_->value.size(), T(0)); }

  T item() const {
    if (numel() != 1) throw DimensionError("item() on non-scalar tensor");
    return node_->value[0];
  }

  // NCHW element access for 4-d tensors.
  T at(int64_t n, int64_t c, int64_t h, int64_t w) const {
    const Shape& s = node_->shape;
    return node_->value[static_cast<size_t>(((n * s[1] + c) * s[2] + h) * s[3] + w)];
  }

  std::shared_ptr<NodeT> node() const { return node_; }

 private:
  std::shared_ptr<NodeT> node_;
};

namespace detail {

// Builds the result node, wiring parents/backward only when the tape is live.
template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> value, const char* op,
                      std::vector<Tensor<T>> parents,
                      std::function<void(Node<T>&)> backward) {
  ensure_finite(value, op);
  auto n = std::make_shared<Node<T>>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  bool need = false;
  if (grad_enabled()) {
    for (const auto& p : parents) need = need || p.requires_grad();
  }
  if (need) {
    n->requires_grad = true;
    n->parents.reserve(parents.size());
    for (auto& p : parents) n->parents.push_back(p.node());
    n->backward = std::move(backward);
  }
  return Tensor<T>(std::move(n));
}

template <typename T>
void accumulate(Node<T>& parent, const std::vector<T>& contrib) {
  parent.ensure_grad();
  for (size_t i = 0; i < contrib.size(); ++i) parent.grad[i] += contrib[i];
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Backward pass

template <typename T>
void backward(const Tensor<T>& root) {
  if (root.numel() != 1) throw DimensionError("backward() requires a scalar root");
  using NodeT = detail::Node<T>;
  std::vector<NodeT*> order;
  std::unordered_set<NodeT*> seen;
  // Iterative post-order DFS; graphs can be deep for elementwise chains.
  std::vector<std::pair<NodeT*, size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      NodeT* p = node->parents[idx++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root.node()->ensure_grad();
  root.node()->grad[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    NodeT* n = *it;
    if (n->backward) {
      n->ensure_grad();
      n->backward(*n);
    }
  }
  for (NodeT* n : order) {
    if (!n->grad.empty()) ensure_finite(n->grad, "backward");
  }
}

// ---------------------------------------------------------------------------
// Broadcasting helpers (dims equal or 1; ranks aligned from the right)

namespace detail {

constexpr int kMaxRank = 4;

struct BcastPlan {
  Shape out;
  std::array<int64_t, kMaxRank> odim{}, astr{}, bstr{};
  int rank = 0;
};

inline BcastPlan broadcast_plan(const Shape& a, const Shape& b) {
  BcastPlan p;
  p.rank = static_cast<int>(std::max(a.size(), b.size()));
  if (p.rank > kMaxRank) throw DimensionError("rank > 4 unsupported");
  std::array<int64_t, kMaxRank> ad{}, bd{};
  ad.fill(1);
  bd.fill(1);
  for (size_t i = 0; i < a.size(); ++i) ad[p.rank - a.size() + i] = a[i];
  for (size_t i = 0; i < b.size(); ++i) bd[p.rank - b.size() + i] = b[i];
  p.out.resize(p.rank);
  for (int i = 0; i < p.rank; ++i) {
    if (ad[i] != bd[i] && ad[i] != 1 && bd[i] != 1)
      throw DimensionError("incompatible shapes " + shape_str(a) + " vs " + shape_str(b));
    p.out[i] = std::max(ad[i], bd[i]);
    p.odim[i] = p.out[i];
  }
  int64_t as = 1, bs = 1;
  for (int i = p.rank - 1; i >= 0; --i) {
    p.astr[i] = (ad[i] == 1) ? 0 : as;
    p.bstr[i] = (bd[i] == 1) ? 0 : bs;
    as *= ad[i];
    bs *= bd[i];
  }
  return p;
}

// Invokes fn(out_index, a_index, b_index) over the broadcast output space.
template <typename F>
void for_broadcast(const BcastPlan& p, F&& fn) {
  std::array<int64_t, kMaxRank> idx{};
  int64_t total = shape_numel(p.out);
  int64_t ai = 0, bi = 0;
  for (int64_t o = 0; o < total; ++o) {
    fn(o, ai, bi);
    for (int d = p.rank - 1; d >= 0; --d) {
      if (++idx[d] < p.odim[d]) {
        ai += p.astr[d];
        bi += p.bstr[d];
        break;
      }
      ai -= p.astr[d] * (p.odim[d] - 1);
      bi -= p.bstr[d] * (p.odim[d] - 1);
      idx[d] = 0;
    }
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Binary elementwise ops

namespace detail {

template <typename T, typename FwdF, typename BwdF>
Tensor<T> binary_op(const char* name, const Tensor<T>& a, const Tensor<T>& b,
                    FwdF fwd, BwdF bwd) {
  BcastPlan plan = broadcast_plan(a.shape(), b.shape());
  std::vector<T> out(static_cast<size_t>(shape_numel(plan.out)));
  const auto& av = a.data();
  const auto& bv = b.data();
  for_broadcast(plan, [&](int64_t o, int64_t ai, int64_t bi) {
    out[static_cast<size_t>(o)] = fwd(av[static_cast<size_t>(ai)], bv[static_cast<size_t>(bi)]);
  });
  return make_result<T>(
      plan.out, std::move(out), name, {a, b},
      [plan, bwd](Node<T>& self) {
        Node<T>& pa = *self.parents[0];
        Node<T>& pb = *self.parents[1];
        bool na = pa.requires_grad, nb = pb.requires_grad;
        if (na) pa.ensure_grad();
        if (nb) pb.ensure_grad();
        for_broadcast(plan, [&](int64_t o, int64_t ai, int64_t bi) {
          T g = self.grad[static_cast<size_t>(o)];
          T da, db;
          bwd(pa.value[static_cast<size_t>(ai)], pb.value[static_cast<size_t>(bi)],
              self.value[static_cast<size_t>(o)], g, da, db);
          if (na) pa.grad[static_cast<size_t>(ai)] += da;
          if (nb) pb.grad[static_cast<size_t>(bi)] += db;
        });
      });
}

template <typename T, typename FwdF, typename BwdF>
Tensor<T> unary_op(const char* name, const Tensor<T>& a, FwdF fwd, BwdF bwd) {
  std::vector<T> out(a.data().size());
  const auto& av = a.data();
  for (size_t i = 0; i < av.size(); ++i) out[i] = fwd(av[i]);
  return make_result<T>(
      a.shape(), std::move(out), name, {a},
      [bwd](Node<T>& self) {
        Node<T>& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (size_t i = 0; i < self.value.size(); ++i)
          p.grad[i] += bwd(p.value[i], self.value[i]) * self.grad[i];
      });
}

}  // namespace detail

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return detail::binary_op<T>(
      "add", a, b, [](T x, T y) { return x + y; },
      [](T, T, T, T g, T& da, T& db) { da = g; db = g; });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return detail::binary_op<T>(
      "sub", a, b, [](T x, T y) { return x - y; },
      [](T, T, T, T g, T& da, T& db) { da = g; db = -g; });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return detail::binary_op<T>(
      "mul", a, b, [](T x, T y) { return x * y; },
      [](T x, T y, T, T g, T& da, T& db) { da = g * y; db = g * x; });
}

template <typename T>
Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b) {
  return detail::binary_op<T>(
      "div", a, b, [](T x, T y) { return x / y; },
      [](T x, T y, T, T g, T& da, T& db) {
        da = g / y;
        db = -g * x / (y * y);
      });
}

// maximum/minimum: ties route the gradient to the first argument.
template <typename T>
Tensor<T> maximum(const Tensor<T>& a, const Tensor<T>& b) {
  return detail::binary_op<T>(
      "maximum", a, b, [](T x, T y) { return x >= y ? x : y; },
      [](T x, T y, T, T g, T& da, T& db) {
        da = x >= y ? g : T(0);
        db = x >= y ? T(0) : g;
      });
}

template <typename T>
Tensor<T> minimum(const Tensor<T>& a, const Tensor<T>& b) {
  return detail::binary_op<T>(
      "minimum", a, b, [](T x, T y) { return x <= y ? x : y; },
      [](T x, T y, T, T g, T& da, T& db) {
        da = x <= y ? g : T(0);
        db = x <= y ? T(0) : g;
      });
}

// atan2 with zero subgradient at the (0,0) singularity (achromatic pixels).
template <typename T>
Tensor<T> atan2t(const Tensor<T>& y, const Tensor<T>& x) {
  return detail::binary_op<T>(
      "atan2", y, x, [](T yy, T xx) { return std::atan2(yy, xx); },
      [](T yy, T xx, T, T g, T& dy, T& dx) {
        T denom = xx * xx + yy * yy;
        if (denom == T(0)) {
          dy = T(0);
          dx = T(0);
        } else {
          dy = g * xx / denom;
          dx = -g * yy / denom;
        }
      });
}

// ---------------------------------------------------------------------------
// Unary elementwise ops

template <typename T>
Tensor<T> affine(const Tensor<T>& a, T scale, T shift) {
  return detail::unary_op<T>(
      "affine", a, [scale, shift](T x) { return x * scale + shift; },
      [scale](T, T) { return scale; });
}

template <typename T>
Tensor<T> neg(const Tensor<T>& a) { return affine(a, T(-1), T(0)); }

template <typename T>
Tensor<T> square(const Tensor<T>& a) {
  return detail::unary_op<T>(
      "square", a, [](T x) { return x * x; }, [](T x, T) { return T(2) * x; });
}

// d/dx sqrt at 0 is pinned to 0: callers clamp the active domain, masked-out
// branches must not emit NaN.
template <typename T>
Tensor<T> sqrt(const Tensor<T>& a) {
  return detail::unary_op<T>(
      "sqrt", a, [](T x) { return std::sqrt(x); },
      [](T x, T y) { return x == T(0) ? T(0) : T(0.5) / y; });
}

template <typename T>
Tensor<T> exp(const Tensor<T>& a) {
  return detail::unary_op<T>(
      "exp", a, [](T x) { return std::exp(x); }, [](T, T y) { return y; });
}

template <typename T>
Tensor<T> log(const Tensor<T>& a) {
  return detail::unary_op<T>(
      "log", a, [](T x) { return std::log(x); }, [](T x, T) { return T(1) / x; });
}

template <typename T>
Tensor<T> pow_const(const Tensor<T>& a, T e) {
  return detail::unary_op<T>(
      "pow_const", a, [e](T x) { return std::pow(x, e); },
      [e](T x, T y) { return x == T(0) ? T(0) : e * y / x; });
}

template <typename T>
Tensor<T> abs(const Tensor<T>& a) {
  return detail::unary_op<T>(
      "abs", a, [](T x) { return std::abs(x); },
      [](T x, T) { return x > T(0) ? T(1) : (x < T(0) ? T(-1) : T(0)); });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
  return detail::unary_op<T>(
      "relu", a, [](T x) { return x > T(0) ? x : T(0); },
      [](T x, T) { return x > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
  return detail::unary_op<T>(
      "sigmoid", a, [](T x) { return T(1) / (T(1) + std::exp(-x)); },
      [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& a) {
  return detail::unary_op<T>(
      "tanh", a, [](T x) { return std::tanh(x); },
      [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Tensor<T> softplus(const Tensor<T>& a) {
  return detail::unary_op<T>(
      "softplus", a,
      [](T x) { return x > T(30) ? x : std::log1p(std::exp(x)); },
      [](T x, T) { return T(1) / (T(1) + std::exp(-x)); });
}

template <typename T>
Tensor<T> erf(const Tensor<T>& a) {
  constexpr double kTwoOverSqrtPi = 1.1283791670955126;
  return detail::unary_op<T>(
      "erf", a, [](T x) { return std::erf(x); },
      [](T x, T) { return T(kTwoOverSqrtPi * std::exp(-double(x) * double(x))); });
}

template <typename T>
Tensor<T> sin(const Tensor<T>& a) {
  return detail::unary_op<T>(
      "sin", a, [](T x) { return std::sin(x); }, [](T x, T) { return std::cos(x); });
}

template <typename T>
Tensor<T> cos(const Tensor<T>& a) {
  return detail::unary_op<T>(
      "cos", a, [](T x) { return std::cos(x); }, [](T x, T) { return -std::sin(x); });
}

// Inclusive-boundary clamps: gradient passes where lo <= x <= hi.
template <typename T>
Tensor<T> clamp_min(const Tensor<T>& a, T lo) {
  return detail::unary_op<T>(
      "clamp_min", a, [lo](T x) { return x < lo ? lo : x; },
      [lo](T x, T) { return x >= lo ? T(1) : T(0); });
}

template <typename T>
Tensor<T> clamp_max(const Tensor<T>& a, T hi) {
  return detail::unary_op<T>(
      "clamp_max", a, [hi](T x) { return x > hi ? hi : x; },
      [hi](T x, T) { return x <= hi ? T(1) : T(0); });
}

template <typename T>
Tensor<T> clamp(const Tensor<T>& a, T lo, T hi) {
  return clamp_max(clamp_min(a, lo), hi);
}

// Nearest-integer rounding, ties away from zero; straight-through gradient.
template <typename T>
Tensor<T> round_st(const Tensor<T>& a) {
  return detail::unary_op<T>(
      "round", a, [](T x) { return std::round(x); }, [](T, T) { return T(1); });
}

// ---------------------------------------------------------------------------
// Masks and selection (masks carry no gradient)

template <typename T, typename Pred>
Tensor<T> mask_where(const Tensor<T>& a, Pred pred) {
  std::vector<T> out(a.data().size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = pred(a.data()[i]) ? T(1) : T(0);
  return Tensor<T>::from_vector(a.shape(), std::move(out));
}

template <typename T>
Tensor<T> select(const Tensor<T>& mask, const Tensor<T>& a, const Tensor<T>& b) {
  if (mask.shape() != a.shape() || a.shape() != b.shape())
    throw DimensionError("select requires identical shapes");
  std::vector<T> out(a.data().size());
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = mask.data()[i] != T(0) ? a.data()[i] : b.data()[i];
  std::vector<T> m = mask.data();
  return detail::make_result<T>(
      a.shape(), std::move(out), "select", {a, b},
      [m](detail::Node<T>& self) {
        detail::Node<T>& pa = *self.parents[0];
        detail::Node<T>& pb = *self.parents[1];
        bool na = pa.requires_grad, nb = pb.requires_grad;
        if (na) pa.ensure_grad();
        if (nb) pb.ensure_grad();
        for (size_t i = 0; i < self.value.size(); ++i) {
          if (m[i] != T(0)) {
            if (na) pa.grad[i] += self.grad[i];
          } else if (nb) {
            pb.grad[i] += self.grad[i];
          }
        }
      });
}

// ---------------------------------------------------------------------------
// Reductions

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  T acc = 0;
  for (T x : a.data()) acc += x;
  return detail::make_result<T>(
      {1}, {acc}, "sum", {a}, [](detail::Node<T>& self) {
        detail::Node<T>& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        T g = self.grad[0];
        for (auto& gi : p.grad) gi += g;
      });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
  return affine(sum(a), T(1) / T(a.numel()), T(0));
}

// ---------------------------------------------------------------------------
// Shape ops

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
  if (shape_numel(shape) != a.numel())
    throw DimensionError("reshape element count mismatch");
  std::vector<T> out = a.data();
  return detail::make_result<T>(
      std::move(shape), std::move(out), "reshape", {a},
      [](detail::Node<T>& self) {
        detail::Node<T>& p = *self.parents[0];
        if (!p.requires_grad) return;
        detail::accumulate(p, self.grad);
      });
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() != 4 || sb.size() != 4 || sa[0] != sb[0] || sa[2] != sb[2] || sa[3] != sb[3])
    throw DimensionError("concat_channels shape mismatch");
  Shape so = {sa[0], sa[1] + sb[1], sa[2], sa[3]};
  std::vector<T> out(static_cast<size_t>(shape_numel(so)));
  int64_t plane = sa[2] * sa[3];
  for (int64_t n = 0; n < sa[0]; ++n) {
    std::copy_n(a.data().begin() + n * sa[1] * plane, sa[1] * plane,
                out.begin() + n * so[1] * plane);
    std::copy_n(b.data().begin() + n * sb[1] * plane, sb[1] * plane,
                out.begin() + (n * so[1] + sa[1]) * plane);
  }
  int64_t ca = sa[1];
  return detail::make_result<T>(
      so, std::move(out), "concat_channels", {a, b},
      [ca, plane](detail::Node<T>& self) {
        detail::Node<T>& pa = *self.parents[0];
        detail::Node<T>& pb = *self.parents[1];
        int64_t n_count = self.shape[0];
        int64_t co = self.shape[1];
        int64_t cb = co - ca;
        if (pa.requires_grad) {
          pa.ensure_grad();
          for (int64_t n = 0; n < n_count; ++n)
            for (int64_t i = 0; i < ca * plane; ++i)
              pa.grad[static_cast<size_t>(n * ca * plane + i)] +=
                  self.grad[static_cast<size_t>(n * co * plane + i)];
        }
        if (pb.requires_grad) {
          pb.ensure_grad();
          for (int64_t n = 0; n < n_count; ++n)
            for (int64_t i = 0; i < cb * plane; ++i)
              pb.grad[static_cast<size_t>(n * cb * plane + i)] +=
                  self.grad[static_cast<size_t>((n * co + ca) * plane + i)];
        }
      });
}

template <typename T>
Tensor<T> slice_channels(const Tensor<T>& a, int64_t c0, int64_t c1) {
  const Shape& s = a.shape();
  if (s.size() != 4 || c0 < 0 || c1 > s[1] || c0 >= c1)
    throw DimensionError("slice_channels out of range");
  Shape so = {s[0], c1 - c0, s[2], s[3]};
  int64_t plane = s[2] * s[3];
  std::vector<T> out(static_cast<size_t>(shape_numel(so)));
  for (int64_t n = 0; n < s[0]; ++n)
    std::copy_n(a.data().begin() + (n * s[1] + c0) * plane, (c1 - c0) * plane,
                out.begin() + n * (c1 - c0) * plane);
  return detail::make_result<T>(
      so, std::move(out), "slice_channels", {a},
      [c0, plane](detail::Node<T>& self) {
        detail::Node<T>& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        int64_t n_count = self.shape[0];
        int64_t cs = self.shape[1];
        int64_t cp = p.shape[1];
        for (int64_t n = 0; n < n_count; ++n)
          for (int64_t i = 0; i < cs * plane; ++i)
            p.grad[static_cast<size_t>((n * cp + c0) * plane + i)] +=
                self.grad[static_cast<size_t>(n * cs * plane + i)];
      });
}

// Additive uniform noise in [-0.5, 0.5) with pass-through gradient.
template <typename T>
Tensor<T> add_uniform_noise(const Tensor<T>& a, Rng& rng) {
  std::vector<T> out(a.data().size());
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = a.data()[i] + static_cast<T>(rng.uniform() - 0.5);
  return detail::make_result<T>(
      a.shape(), std::move(out), "uniform_noise", {a},
      [](detail::Node<T>& self) {
        detail::Node<T>& p = *self.parents[0];
        if (!p.requires_grad) return;
        detail::accumulate(p, self.grad);
      });
}

// Operator sugar used by composite transforms.
template <typename T> Tensor<T> operator+(const Tensor<T>& a, const Tensor<T>& b) { return add(a, b); }
template <typename T> Tensor<T> operator-(const Tensor<T>& a, const Tensor<T>& b) { return sub(a, b); }
template <typename T> Tensor<T> operator*(const Tensor<T>& a, const Tensor<T>& b) { return mul(a, b); }
template <typename T> Tensor<T> operator/(const Tensor<T>& a, const Tensor<T>& b) { return div(a, b); }
template <typename T> Tensor<T> operator*(const Tensor<T>& a, T s) { return affine(a, s, T(0)); }
template <typename T> Tensor<T> operator*(T s, const Tensor<T>& a) { return affine(a, s, T(0)); }
template <typename T> Tensor<T> operator+(const Tensor<T>& a, T s) { return affine(a, T(1), s); }
template <typename T> Tensor<T> operator-(const Tensor<T>& a, T s) { return affine(a, T(1), -s); }

}  // namespace clc

#endif
