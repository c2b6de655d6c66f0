#ifndef CLCODEC_NN_HPP
#define CLCODEC_NN_HPP

#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "clcodec/tensor_ops.hpp"

namespace clc {

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> tensor;
};

// Ordered collection of named learnable tensors; names are unique and stable,
// iteration order is registration order (checkpoint layout depends on it).
template <typename T>
class ParamSet {
 public:
  Tensor<T> add(const std::string& name, Tensor<T> t) {
    if (index_.count(name)) throw UsageError("duplicate parameter name: " + name);
    t.set_requires_grad(true);
    index_[name] = items_.size();
    items_.push_back({name, t});
    return t;
  }

  Tensor<T>* find(const std::string& name) {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : &items_[it->second].tensor;
  }

  std::vector<Parameter<T>>& items() { return items_; }
  const std::vector<Parameter<T>>& items() const { return items_; }
  size_t size() const { return items_.size(); }

  void zero_grad() {
    for (auto& p : items_) p.tensor.zero_grad();
  }

  double grad_norm() const {
    double acc = 0;
    for (const auto& p : items_)
      for (T g : p.tensor.grad()) acc += double(g) * double(g);
    return std::sqrt(acc);
  }

  void clip_grad_norm(double max_norm) {
    double n = grad_norm();
    if (n <= max_norm || n == 0) return;
    T scale = static_cast<T>(max_norm / n);
    for (auto& p : items_)
      for (T& g : const_cast<std::vector<T>&>(p.tensor.grad())) g *= scale;
  }

 private:
  std::vector<Parameter<T>> items_;
  std::unordered_map<std::string, size_t> index_;
};

// ---------------------------------------------------------------------------
// Initialization

inline double softplus_inv(double y) { return std::log(std::expm1(y)); }

template <typename T>
Tensor<T> glorot_uniform(Shape shape, int64_t fan_in, int64_t fan_out, Rng& rng) {
  double limit = std::sqrt(6.0 / double(fan_in + fan_out));
  std::vector<T> v(static_cast<size_t>(shape_numel(shape)));
  for (auto& x : v) x = static_cast<T>(rng.uniform(-limit, limit));
  return Tensor<T>::from_vector(std::move(shape), std::move(v));
}

// ---------------------------------------------------------------------------
// Layers. Each registers its parameters under "<prefix>.<name>".

template <typename T>
struct Conv2dLayer {
  Tensor<T> kernel, bias;
  int64_t stride = 1;

  Conv2dLayer() = default;
  Conv2dLayer(ParamSet<T>& ps, const std::string& prefix, int64_t in_ch, int64_t out_ch,
              int64_t ksize, int64_t stride_, Rng& rng)
      : stride(stride_) {
    kernel = ps.add(prefix + ".kernel",
                    glorot_uniform<T>({out_ch, in_ch, ksize, ksize}, in_ch * ksize * ksize,
                                      out_ch * ksize * ksize, rng));
    bias = ps.add(prefix + ".bias", Tensor<T>::zeros({out_ch}));
  }

  Tensor<T> apply(const Tensor<T>& x) const { return conv2d(x, kernel, bias, stride); }
};

template <typename T>
struct TConv2dLayer {
  Tensor<T> kernel, bias;
  int64_t stride = 1;

  TConv2dLayer() = default;
  TConv2dLayer(ParamSet<T>& ps, const std::string& prefix, int64_t in_ch, int64_t out_ch,
               int64_t ksize, int64_t stride_, Rng& rng)
      : stride(stride_) {
    kernel = ps.add(prefix + ".kernel",
                    glorot_uniform<T>({in_ch, out_ch, ksize, ksize}, in_ch * ksize * ksize,
                                      out_ch * ksize * ksize, rng));
    bias = ps.add(prefix + ".bias", Tensor<T>::zeros({out_ch}));
  }

  Tensor<T> apply(const Tensor<T>& x) const { return transposed_conv2d(x, kernel, bias, stride); }
};

// GDN with unconstrained storage: beta = softplus(beta_raw) + 1e-6,
// gamma = softplus(gamma_raw) (> 0), so the divisor stays positive.
template <typename T>
struct GdnLayer {
  static constexpr double kBetaFloor = 1e-6;
  Tensor<T> beta_raw, gamma_raw;
  bool inverse = false;

  GdnLayer() = default;
  GdnLayer(ParamSet<T>& ps, const std::string& prefix, int64_t channels, bool inverse_)
      : inverse(inverse_) {
    std::vector<T> b(static_cast<size_t>(channels),
                     static_cast<T>(softplus_inv(1.0 - kBetaFloor)));
    std::vector<T> g(static_cast<size_t>(channels * channels),
                     static_cast<T>(softplus_inv(1e-6)));
    for (int64_t c = 0; c < channels; ++c)
      g[static_cast<size_t>(c * channels + c)] = static_cast<T>(softplus_inv(0.1));
    beta_raw = ps.add(prefix + ".beta", Tensor<T>::from_vector({channels}, std::move(b)));
    gamma_raw = ps.add(prefix + ".gamma",
                       Tensor<T>::from_vector({channels, channels}, std::move(g)));
  }

  Tensor<T> apply(const Tensor<T>& x) const {
    Tensor<T> beta = softplus(beta_raw) + static_cast<T>(kBetaFloor);
    Tensor<T> gamma = softplus(gamma_raw);
    return gdn(x, beta, gamma, inverse);
  }
};

// Channel-then-spatial attention. Channel MLP reduction ratio 8, spatial
// kernel 7x7.
template <typename T>
struct CbamLayer {
  Conv2dLayer<T> mlp0, mlp1;
  Conv2dLayer<T> spatial;

  CbamLayer() = default;
  CbamLayer(ParamSet<T>& ps, const std::string& prefix, int64_t channels, Rng& rng) {
    int64_t hidden = std::max<int64_t>(1, channels / 8);
    mlp0 = Conv2dLayer<T>(ps, prefix + ".mlp0", channels, hidden, 1, 1, rng);
    mlp1 = Conv2dLayer<T>(ps, prefix + ".mlp1", hidden, channels, 1, 1, rng);
    spatial = Conv2dLayer<T>(ps, prefix + ".spatial", 2, 1, 7, 1, rng);
  }

  Tensor<T> apply(const Tensor<T>& x) const {
    Tensor<T> avg_logits = mlp1.apply(relu(mlp0.apply(global_avg_pool(x))));
    Tensor<T> max_logits = mlp1.apply(relu(mlp0.apply(global_max_pool(x))));
    Tensor<T> xc = mul(x, sigmoid(add(avg_logits, max_logits)));
    Tensor<T> maps = concat_channels(channel_mean(xc), channel_max(xc));
    Tensor<T> gate = sigmoid(spatial.apply(maps));
    return mul(xc, gate);
  }
};

// ---------------------------------------------------------------------------
// Adam

template <typename T>
struct AdamState {
  uint64_t step = 0;
  double lr = 1e-4, beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8;
  std::vector<std::vector<T>> m, v;  // parallel to ParamSet order

  void init_for(const ParamSet<T>& ps) {
    m.clear();
    v.clear();
    for (const auto& p : ps.items()) {
      m.emplace_back(p.tensor.data().size(), T(0));
      v.emplace_back(p.tensor.data().size(), T(0));
    }
  }
};

template <typename T>
void adam_step(ParamSet<T>& params, AdamState<T>& state) {
  if (state.m.size() != params.size()) throw UsageError("adam state does not match params");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, double(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, double(state.step));
  for (size_t i = 0; i < params.size(); ++i) {
    auto& p = params.items()[i].tensor;
    if (p.grad().size() != p.data().size())
      throw UsageError("missing gradient for " + params.items()[i].name);
    auto& m = state.m[i];
    auto& v = state.v[i];
    auto& w = p.data();
    const auto& g = p.grad();
    for (size_t j = 0; j < w.size(); ++j) {
      m[j] = static_cast<T>(state.beta1 * m[j] + (1.0 - state.beta1) * g[j]);
      v[j] = static_cast<T>(state.beta2 * v[j] + (1.0 - state.beta2) * double(g[j]) * double(g[j]));
      double mhat = m[j] / bc1;
      double vhat = v[j] / bc2;
      w[j] = static_cast<T>(w[j] - state.lr * mhat / (std::sqrt(vhat) + state.epsilon));
    }
    if (!std::all_of(w.begin(), w.end(),
                     [](T x) { return std::isfinite(static_cast<double>(x)); }))
      throw NumericError("non-finite parameter after adam step: " + params.items()[i].name);
  }
}

// ---------------------------------------------------------------------------
// Gradient checking against central finite differences. Samples up to
// max_coords coordinates per input (0 = all); returns the worst relative
// error with denominator max(|analytic|, |numeric|, 1e-6).

template <typename T>
double grad_check(const std::function<Tensor<T>()>& f, std::vector<Tensor<T>> inputs,
                  double h = 1e-5, int64_t max_coords = 0, uint64_t seed = 1234) {
  for (auto& t : inputs) t.zero_grad();
  Tensor<T> y = f();
  backward(y);
  std::vector<std::vector<T>> analytic;
  for (auto& t : inputs) {
    if (t.grad().size() != t.data().size())
      analytic.emplace_back(t.data().size(), T(0));
    else
      analytic.push_back(t.grad());
  }
  Rng rng(seed);
  double worst = 0;
  NoGradGuard ng;
  for (size_t ti = 0; ti < inputs.size(); ++ti) {
    auto& data = inputs[ti].data();
    int64_t n = static_cast<int64_t>(data.size());
    std::vector<int64_t> coords;
    if (max_coords == 0 || n <= max_coords) {
      coords.resize(static_cast<size_t>(n));
      for (int64_t i = 0; i < n; ++i) coords[static_cast<size_t>(i)] = i;
    } else {
      for (int64_t i = 0; i < max_coords; ++i)
        coords.push_back(static_cast<int64_t>(rng.below(static_cast<uint64_t>(n))));
    }
    for (int64_t ci : coords) {
      T saved = data[static_cast<size_t>(ci)];
      data[static_cast<size_t>(ci)] = saved + static_cast<T>(h);
      double fp = static_cast<double>(f().item());
      data[static_cast<size_t>(ci)] = saved - static_cast<T>(h);
      double fm = static_cast<double>(f().item());
      data[static_cast<size_t>(ci)] = saved;
      double numeric = (fp - fm) / (2.0 * h);
      double a = static_cast<double>(analytic[ti][static_cast<size_t>(ci)]);
      double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace clc

#endif
