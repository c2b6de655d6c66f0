#ifndef CLCODEC_TENSOR_OPS_HPP
#define CLCODEC_TENSOR_OPS_HPP

#include <array>

#include "clcodec/parallel.hpp"
#include "clcodec/tensor.hpp"

namespace clc {

// Zero "same" padding: output spatial = ceil(input/stride), surplus padding
// goes to the bottom/right.
struct PadSpec {
  bool same = true;
  int64_t top = 0, left = 0, bottom = 0, right = 0;
  static PadSpec Same() { return {}; }
  static PadSpec Explicit(int64_t t, int64_t l, int64_t b, int64_t r) {
    return {false, t, l, b, r};
  }
};

namespace detail {

inline int64_t ceil_div(int64_t a, int64_t b) { return (a + b - 1) / b; }

inline void same_pad(int64_t in, int64_t k, int64_t stride, int64_t& begin, int64_t& end) {
  int64_t out = ceil_div(in, stride);
  int64_t total = std::max<int64_t>((out - 1) * stride + k - in, 0);
  begin = total / 2;
  end = total - begin;
}

inline int64_t reflect_index(int64_t i, int64_t n) {
  if (n == 1) return 0;
  int64_t period = 2 * (n - 1);
  i = ((i % period) + period) % period;
  return i < n ? i : period - i;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// conv2d: input (N,Ci,H,W), kernel (Co,Ci,kh,kw), bias (Co).

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias,
                 int64_t stride, PadSpec pad = PadSpec::Same()) {
  const Shape& xs = input.shape();
  const Shape& ks = kernel.shape();
  if (xs.size() != 4 || ks.size() != 4) throw DimensionError("conv2d expects 4-d tensors");
  if (xs[1] != ks[1])
    throw DimensionError("conv2d channel mismatch: input " + shape_str(xs) + " kernel " +
                         shape_str(ks));
  if (bias.shape() != Shape{ks[0]}) throw DimensionError("conv2d bias shape mismatch");
  if (stride < 1) throw DimensionError("conv2d stride must be >= 1");
  const int64_t N = xs[0], Ci = xs[1], H = xs[2], W = xs[3];
  const int64_t Co = ks[0], kh = ks[2], kw = ks[3];
  int64_t pt, pb, pl, pr;
  if (pad.same) {
    detail::same_pad(H, kh, stride, pt, pb);
    detail::same_pad(W, kw, stride, pl, pr);
  } else {
    pt = pad.top; pb = pad.bottom; pl = pad.left; pr = pad.right;
  }
  const int64_t Ho = (H + pt + pb - kh) / stride + 1;
  const int64_t Wo = (W + pl + pr - kw) / stride + 1;
  if (Ho < 1 || Wo < 1) throw DimensionError("conv2d output would be empty");

  std::vector<T> out(static_cast<size_t>(N * Co * Ho * Wo));
  const T* x = input.data().data();
  const T* k = kernel.data().data();
  const T* b = bias.data().data();
  parallel_for(N * Co * Ho, [&](int64_t row0, int64_t row1) {
    for (int64_t row = row0; row < row1; ++row) {
      int64_t oh = row % Ho;
      int64_t o = (row / Ho) % Co;
      int64_t n = row / (Ho * Co);
      T* orow = out.data() + row * Wo;
      for (int64_t ow = 0; ow < Wo; ++ow) {
        T acc = b[o];
        for (int64_t ci = 0; ci < Ci; ++ci) {
          const T* xc = x + (n * Ci + ci) * H * W;
          const T* kc = k + (o * Ci + ci) * kh * kw;
          for (int64_t u = 0; u < kh; ++u) {
            int64_t ih = oh * stride + u - pt;
            if (ih < 0 || ih >= H) continue;
            for (int64_t v = 0; v < kw; ++v) {
              int64_t iw = ow * stride + v - pl;
              if (iw < 0 || iw >= W) continue;
              acc += kc[u * kw + v] * xc[ih * W + iw];
            }
          }
        }
        orow[ow] = acc;
      }
    }
  });

  auto bwd = [=](detail::Node<T>& self) {
    detail::Node<T>& px = *self.parents[0];
    detail::Node<T>& pk = *self.parents[1];
    detail::Node<T>& pb2 = *self.parents[2];
    bool nx = px.requires_grad, nk = pk.requires_grad, nb = pb2.requires_grad;
    if (nx) px.ensure_grad();
    if (nk) pk.ensure_grad();
    if (nb) pb2.ensure_grad();
    for (int64_t n = 0; n < N; ++n)
      for (int64_t o = 0; o < Co; ++o)
        for (int64_t oh = 0; oh < Ho; ++oh)
          for (int64_t ow = 0; ow < Wo; ++ow) {
            T g = self.grad[static_cast<size_t>(((n * Co + o) * Ho + oh) * Wo + ow)];
            if (g == T(0)) continue;
            if (nb) pb2.grad[static_cast<size_t>(o)] += g;
            if (!nx && !nk) continue;
            for (int64_t ci = 0; ci < Ci; ++ci)
              for (int64_t u = 0; u < kh; ++u) {
                int64_t ih = oh * stride + u - pt;
                if (ih < 0 || ih >= H) continue;
                for (int64_t v = 0; v < kw; ++v) {
                  int64_t iw = ow * stride + v - pl;
                  if (iw < 0 || iw >= W) continue;
                  size_t xi = static_cast<size_t>(((n * Ci + ci) * H + ih) * W + iw);
                  size_t ki = static_cast<size_t>(((o * Ci + ci) * kh + u) * kw + v);
                  if (nx) px.grad[xi] += g * pk.value[ki];
                  if (nk) pk.grad[ki] += g * px.value[xi];
                }
              }
          }
  };
  return detail::make_result<T>({N, Co, Ho, Wo}, std::move(out), "conv2d",
                                {input, kernel, bias}, bwd);
}

// ---------------------------------------------------------------------------
// transposed_conv2d: input (N,Ci,H,W), kernel (Ci,Co,kh,kw), bias (Co).
// Output spatial = input * stride; exact adjoint of conv2d("same") with the
// shared kernel for the matching configuration.

template <typename T>
Tensor<T> transposed_conv2d(const Tensor<T>& input, const Tensor<T>& kernel,
                            const Tensor<T>& bias, int64_t stride) {
  const Shape& xs = input.shape();
  const Shape& ks = kernel.shape();
  if (xs.size() != 4 || ks.size() != 4)
    throw DimensionError("transposed_conv2d expects 4-d tensors");
  if (xs[1] != ks[0])
    throw DimensionError("transposed_conv2d channel mismatch: input " + shape_str(xs) +
                         " kernel " + shape_str(ks));
  if (bias.shape() != Shape{ks[1]}) throw DimensionError("transposed_conv2d bias shape mismatch");
  const int64_t N = xs[0], Ci = xs[1], H = xs[2], W = xs[3];
  const int64_t Co = ks[1], kh = ks[2], kw = ks[3];
  const int64_t Ho = H * stride, Wo = W * stride;
  int64_t pt, pb, pl, pr;
  detail::same_pad(Ho, kh, stride, pt, pb);
  detail::same_pad(Wo, kw, stride, pl, pr);
  (void)pb; (void)pr;

  std::vector<T> out(static_cast<size_t>(N * Co * Ho * Wo));
  const T* x = input.data().data();
  const T* k = kernel.data().data();
  const T* b = bias.data().data();
  parallel_for(N * Co * Ho, [&](int64_t row0, int64_t row1) {
    for (int64_t row = row0; row < row1; ++row) {
      int64_t a = row % Ho;
      int64_t o = (row / Ho) % Co;
      int64_t n = row / (Ho * Co);
      T* orow = out.data() + row * Wo;
      for (int64_t bcol = 0; bcol < Wo; ++bcol) {
        T acc = b[o];
        for (int64_t u = 0; u < kh; ++u) {
          int64_t ph = a + pt - u;
          if (ph < 0 || ph % stride) continue;
          ph /= stride;
          if (ph >= H) continue;
          for (int64_t v = 0; v < kw; ++v) {
            int64_t qw = bcol + pl - v;
            if (qw < 0 || qw % stride) continue;
            qw /= stride;
            if (qw >= W) continue;
            for (int64_t ci = 0; ci < Ci; ++ci)
              acc += k[((ci * Co + o) * kh + u) * kw + v] * x[((n * Ci + ci) * H + ph) * W + qw];
          }
        }
        orow[bcol] = acc;
      }
    }
  });

  auto bwd = [=](detail::Node<T>& self) {
    detail::Node<T>& px = *self.parents[0];
    detail::Node<T>& pk = *self.parents[1];
    detail::Node<T>& pb2 = *self.parents[2];
    bool nx = px.requires_grad, nk = pk.requires_grad, nb = pb2.requires_grad;
    if (nx) px.ensure_grad();
    if (nk) pk.ensure_grad();
    if (nb) pb2.ensure_grad();
    for (int64_t n = 0; n < N; ++n)
      for (int64_t o = 0; o < Co; ++o)
        for (int64_t a = 0; a < Ho; ++a)
          for (int64_t bcol = 0; bcol < Wo; ++bcol) {
            T g = self.grad[static_cast<size_t>(((n * Co + o) * Ho + a) * Wo + bcol)];
            if (nb) pb2.grad[static_cast<size_t>(o)] += g;
            if (g == T(0) || (!nx && !nk)) continue;
            for (int64_t u = 0; u < kh; ++u) {
              int64_t ph = a + pt - u;
              if (ph < 0 || ph % stride) continue;
              ph /= stride;
              if (ph >= H) continue;
              for (int64_t v = 0; v < kw; ++v) {
                int64_t qw = bcol + pl - v;
                if (qw < 0 || qw % stride) continue;
                qw /= stride;
                if (qw >= W) continue;
                for (int64_t ci = 0; ci < Ci; ++ci) {
                  size_t xi = static_cast<size_t>(((n * Ci + ci) * H + ph) * W + qw);
                  size_t ki = static_cast<size_t>(((ci * Co + o) * kh + u) * kw + v);
                  if (nx) px.grad[xi] += g * pk.value[ki];
                  if (nk) pk.grad[ki] += g * px.value[xi];
                }
              }
            }
          }
  };
  return detail::make_result<T>({N, Co, Ho, Wo}, std::move(out), "transposed_conv2d",
                                {input, kernel, bias}, bwd);
}

// ---------------------------------------------------------------------------
// Depthwise 1-d valid correlation with a fixed window (axis 2 or 3).

template <typename T>
Tensor<T> corr1d_valid(const Tensor<T>& input, const std::vector<T>& window, int axis) {
  const Shape& s = input.shape();
  if (s.size() != 4 || (axis != 2 && axis != 3)) throw DimensionError("corr1d_valid bad args");
  const int64_t K = static_cast<int64_t>(window.size());
  const int64_t N = s[0], C = s[1], H = s[2], W = s[3];
  const int64_t Ho = axis == 2 ? H - K + 1 : H;
  const int64_t Wo = axis == 3 ? W - K + 1 : W;
  if (Ho < 1 || Wo < 1) throw UsageError("corr1d_valid: input smaller than window");
  std::vector<T> out(static_cast<size_t>(N * C * Ho * Wo));
  const T* x = input.data().data();
  for (int64_t nc = 0; nc < N * C; ++nc) {
    const T* xp = x + nc * H * W;
    T* op = out.data() + nc * Ho * Wo;
    for (int64_t i = 0; i < Ho; ++i)
      for (int64_t j = 0; j < Wo; ++j) {
        T acc = 0;
        for (int64_t t = 0; t < K; ++t)
          acc += window[static_cast<size_t>(t)] *
                 (axis == 2 ? xp[(i + t) * W + j] : xp[i * W + j + t]);
        op[i * Wo + j] = acc;
      }
  }
  auto win = window;
  auto bwd = [win, axis, K, H, W, Ho, Wo](detail::Node<T>& self) {
    detail::Node<T>& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    int64_t NC = self.shape[0] * self.shape[1];
    for (int64_t nc = 0; nc < NC; ++nc) {
      const T* gp = self.grad.data() + nc * Ho * Wo;
      T* gx = p.grad.data() + nc * H * W;
      for (int64_t i = 0; i < Ho; ++i)
        for (int64_t j = 0; j < Wo; ++j) {
          T g = gp[i * Wo + j];
          if (g == T(0)) continue;
          for (int64_t t = 0; t < K; ++t) {
            if (axis == 2)
              gx[(i + t) * W + j] += win[static_cast<size_t>(t)] * g;
            else
              gx[i * W + j + t] += win[static_cast<size_t>(t)] * g;
          }
        }
    }
  };
  return detail::make_result<T>({N, C, Ho, Wo}, std::move(out), "corr1d_valid", {input}, bwd);
}

// 2x2 stride-2 average pooling; odd edges replicate the last row/column.
template <typename T>
Tensor<T> avgpool2(const Tensor<T>& input) {
  const Shape& s = input.shape();
  if (s.size() != 4) throw DimensionError("avgpool2 expects 4-d");
  const int64_t N = s[0], C = s[1], H = s[2], W = s[3];
  const int64_t Ho = detail::ceil_div(H, 2), Wo = detail::ceil_div(W, 2);
  std::vector<T> out(static_cast<size_t>(N * C * Ho * Wo));
  const T* x = input.data().data();
  for (int64_t nc = 0; nc < N * C; ++nc) {
    const T* xp = x + nc * H * W;
    T* op = out.data() + nc * Ho * Wo;
    for (int64_t i = 0; i < Ho; ++i)
      for (int64_t j = 0; j < Wo; ++j) {
        T acc = 0;
        for (int64_t di = 0; di < 2; ++di)
          for (int64_t dj = 0; dj < 2; ++dj)
            acc += xp[std::min(2 * i + di, H - 1) * W + std::min(2 * j + dj, W - 1)];
        op[i * Wo + j] = acc * T(0.25);
      }
  }
  auto bwd = [H, W, Ho, Wo](detail::Node<T>& self) {
    detail::Node<T>& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    int64_t NC = self.shape[0] * self.shape[1];
    for (int64_t nc = 0; nc < NC; ++nc) {
      const T* gp = self.grad.data() + nc * Ho * Wo;
      T* gx = p.grad.data() + nc * H * W;
      for (int64_t i = 0; i < Ho; ++i)
        for (int64_t j = 0; j < Wo; ++j) {
          T g = gp[i * Wo + j] * T(0.25);
          for (int64_t di = 0; di < 2; ++di)
            for (int64_t dj = 0; dj < 2; ++dj)
              gx[std::min(2 * i + di, H - 1) * W + std::min(2 * j + dj, W - 1)] += g;
        }
    }
  };
  return detail::make_result<T>({N, C, Ho, Wo}, std::move(out), "avgpool2", {input}, bwd);
}

// ---------------------------------------------------------------------------
// Global and per-axis pooling

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& input) {
  const Shape& s = input.shape();
  const int64_t N = s[0], C = s[1], HW = s[2] * s[3];
  std::vector<T> out(static_cast<size_t>(N * C));
  const T* x = input.data().data();
  for (int64_t nc = 0; nc < N * C; ++nc) {
    T acc = 0;
    for (int64_t i = 0; i < HW; ++i) acc += x[nc * HW + i];
    out[static_cast<size_t>(nc)] = acc / T(HW);
  }
  auto bwd = [HW](detail::Node<T>& self) {
    detail::Node<T>& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (int64_t nc = 0; nc < self.numel(); ++nc) {
      T g = self.grad[static_cast<size_t>(nc)] / T(HW);
      for (int64_t i = 0; i < HW; ++i) p.grad[static_cast<size_t>(nc * HW + i)] += g;
    }
  };
  return detail::make_result<T>({N, C, 1, 1}, std::move(out), "global_avg_pool", {input}, bwd);
}

template <typename T>
Tensor<T> global_max_pool(const Tensor<T>& input) {
  const Shape& s = input.shape();
  const int64_t N = s[0], C = s[1], HW = s[2] * s[3];
  std::vector<T> out(static_cast<size_t>(N * C));
  std::vector<int64_t> arg(static_cast<size_t>(N * C));
  const T* x = input.data().data();
  for (int64_t nc = 0; nc < N * C; ++nc) {
    T best = x[nc * HW];
    int64_t bi = 0;
    for (int64_t i = 1; i < HW; ++i)
      if (x[nc * HW + i] > best) { best = x[nc * HW + i]; bi = i; }
    out[static_cast<size_t>(nc)] = best;
    arg[static_cast<size_t>(nc)] = bi;
  }
  auto bwd = [arg, HW](detail::Node<T>& self) {
    detail::Node<T>& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (int64_t nc = 0; nc < self.numel(); ++nc)
      p.grad[static_cast<size_t>(nc * HW + arg[static_cast<size_t>(nc)])] +=
          self.grad[static_cast<size_t>(nc)];
  };
  return detail::make_result<T>({N, C, 1, 1}, std::move(out), "global_max_pool", {input}, bwd);
}

template <typename T>
Tensor<T> channel_mean(const Tensor<T>& input) {
  const Shape& s = input.shape();
  const int64_t N = s[0], C = s[1], HW = s[2] * s[3];
  std::vector<T> out(static_cast<size_t>(N * HW), T(0));
  const T* x = input.data().data();
  for (int64_t n = 0; n < N; ++n)
    for (int64_t c = 0; c < C; ++c)
      for (int64_t i = 0; i < HW; ++i)
        out[static_cast<size_t>(n * HW + i)] += x[(n * C + c) * HW + i] / T(C);
  auto bwd = [C, HW](detail::Node<T>& self) {
    detail::Node<T>& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    int64_t N2 = self.shape[0];
    for (int64_t n = 0; n < N2; ++n)
      for (int64_t c = 0; c < C; ++c)
        for (int64_t i = 0; i < HW; ++i)
          p.grad[static_cast<size_t>((n * C + c) * HW + i)] +=
              self.grad[static_cast<size_t>(n * HW + i)] / T(C);
  };
  return detail::make_result<T>({N, 1, s[2], s[3]}, std::move(out), "channel_mean", {input}, bwd);
}

template <typename T>
Tensor<T> channel_max(const Tensor<T>& input) {
  const Shape& s = input.shape();
  const int64_t N = s[0], C = s[1], HW = s[2] * s[3];
  std::vector<T> out(static_cast<size_t>(N * HW));
  std::vector<int64_t> arg(static_cast<size_t>(N * HW));
  const T* x = input.data().data();
  for (int64_t n = 0; n < N; ++n)
    for (int64_t i = 0; i < HW; ++i) {
      T best = x[n * C * HW + i];
      int64_t bc = 0;
      for (int64_t c = 1; c < C; ++c) {
        T v = x[(n * C + c) * HW + i];
        if (v > best) { best = v; bc = c; }
      }
      out[static_cast<size_t>(n * HW + i)] = best;
      arg[static_cast<size_t>(n * HW + i)] = bc;
    }
  auto bwd = [arg, C, HW](detail::Node<T>& self) {
    detail::Node<T>& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    int64_t N2 = self.shape[0];
    for (int64_t n = 0; n < N2; ++n)
      for (int64_t i = 0; i < HW; ++i)
        p.grad[static_cast<size_t>((n * C + arg[static_cast<size_t>(n * HW + i)]) * HW + i)] +=
            self.grad[static_cast<size_t>(n * HW + i)];
  };
  return detail::make_result<T>({N, 1, s[2], s[3]}, std::move(out), "channel_max", {input}, bwd);
}

// ---------------------------------------------------------------------------
// Spatial padding / cropping

template <typename T>
Tensor<T> pad_reflect(const Tensor<T>& input, int64_t pt, int64_t pb, int64_t pl, int64_t pr) {
  const Shape& s = input.shape();
  if (s.size() != 4) throw DimensionError("pad_reflect expects 4-d");
  const int64_t N = s[0], C = s[1], H = s[2], W = s[3];
  const int64_t Ho = H + pt + pb, Wo = W + pl + pr;
  std::vector<T> out(static_cast<size_t>(N * C * Ho * Wo));
  const T* x = input.data().data();
  for (int64_t nc = 0; nc < N * C; ++nc)
    for (int64_t i = 0; i < Ho; ++i) {
      int64_t si = detail::reflect_index(i - pt, H);
      for (int64_t j = 0; j < Wo; ++j) {
        int64_t sj = detail::reflect_index(j - pl, W);
        out[static_cast<size_t>((nc * Ho + i) * Wo + j)] = x[(nc * H + si) * W + sj];
      }
    }
  auto bwd = [pt, pl, H, W, Ho, Wo](detail::Node<T>& self) {
    detail::Node<T>& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    int64_t NC = self.shape[0] * self.shape[1];
    for (int64_t nc = 0; nc < NC; ++nc)
      for (int64_t i = 0; i < Ho; ++i) {
        int64_t si = detail::reflect_index(i - pt, H);
        for (int64_t j = 0; j < Wo; ++j) {
          int64_t sj = detail::reflect_index(j - pl, W);
          p.grad[static_cast<size_t>((nc * H + si) * W + sj)] +=
              self.grad[static_cast<size_t>((nc * Ho + i) * Wo + j)];
        }
      }
  };
  return detail::make_result<T>({N, C, Ho, Wo}, std::move(out), "pad_reflect", {input}, bwd);
}

template <typename T>
Tensor<T> crop(const Tensor<T>& input, int64_t top, int64_t left, int64_t h, int64_t w) {
  const Shape& s = input.shape();
  if (s.size() != 4 || top + h > s[2] || left + w > s[3] || top < 0 || left < 0)
    throw DimensionError("crop out of range");
  const int64_t N = s[0], C = s[1], H = s[2], W = s[3];
  std::vector<T> out(static_cast<size_t>(N * C * h * w));
  const T* x = input.data().data();
  for (int64_t nc = 0; nc < N * C; ++nc)
    for (int64_t i = 0; i < h; ++i)
      for (int64_t j = 0; j < w; ++j)
        out[static_cast<size_t>((nc * h + i) * w + j)] = x[(nc * H + top + i) * W + left + j];
  auto bwd = [top, left, h, w, H, W](detail::Node<T>& self) {
    detail::Node<T>& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    int64_t NC = self.shape[0] * self.shape[1];
    for (int64_t nc = 0; nc < NC; ++nc)
      for (int64_t i = 0; i < h; ++i)
        for (int64_t j = 0; j < w; ++j)
          p.grad[static_cast<size_t>((nc * H + top + i) * W + left + j)] +=
              self.grad[static_cast<size_t>((nc * h + i) * w + j)];
  };
  return detail::make_result<T>({N, C, h, w}, std::move(out), "crop", {input}, bwd);
}

// ---------------------------------------------------------------------------
// Fixed 3x3 channel matrix (color conversions): out_c = sum_j M[c][j] in_j.

template <typename T>
Tensor<T> colormat(const Tensor<T>& input, const std::array<std::array<double, 3>, 3>& m) {
  const Shape& s = input.shape();
  if (s.size() != 4 || s[1] != 3) throw DimensionError("colormat expects (N,3,H,W)");
  const int64_t N = s[0], HW = s[2] * s[3];
  std::vector<T> out(input.data().size());
  const T* x = input.data().data();
  for (int64_t n = 0; n < N; ++n)
    for (int c = 0; c < 3; ++c)
      for (int64_t i = 0; i < HW; ++i)
        out[static_cast<size_t>((n * 3 + c) * HW + i)] =
            static_cast<T>(m[c][0]) * x[(n * 3 + 0) * HW + i] +
            static_cast<T>(m[c][1]) * x[(n * 3 + 1) * HW + i] +
            static_cast<T>(m[c][2]) * x[(n * 3 + 2) * HW + i];
  auto bwd = [m, HW](detail::Node<T>& self) {
    detail::Node<T>& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    int64_t N2 = self.shape[0];
    for (int64_t n = 0; n < N2; ++n)
      for (int j = 0; j < 3; ++j)
        for (int64_t i = 0; i < HW; ++i) {
          T acc = 0;
          for (int c = 0; c < 3; ++c)
            acc += static_cast<T>(m[c][j]) * self.grad[static_cast<size_t>((n * 3 + c) * HW + i)];
          p.grad[static_cast<size_t>((n * 3 + j) * HW + i)] += acc;
        }
  };
  return detail::make_result<T>(s, std::move(out), "colormat", {input}, bwd);
}

// ---------------------------------------------------------------------------
// GDN / IGDN with constrained (positive) beta and gamma supplied as tensors:
//   forward:  z_i = x_i / sqrt(beta_i + sum_j gamma_ij x_j^2)
//   inverse:  z_i = x_i * sqrt(beta_i + sum_j gamma_ij x_j^2)

template <typename T>
Tensor<T> gdn(const Tensor<T>& x, const Tensor<T>& beta, const Tensor<T>& gamma, bool inverse) {
  const Shape& s = x.shape();
  if (s.size() != 4) throw DimensionError("gdn expects 4-d input");
  const int64_t C = s[1];
  if (beta.numel() != C) throw DimensionError("gdn beta length != channels");
  if (gamma.shape() != Shape{C, C} && gamma.shape() != Shape{C, C, 1, 1})
    throw DimensionError("gdn gamma must be channels x channels");
  Tensor<T> gamma_k =
      gamma.shape().size() == 2 ? reshape(gamma, {C, C, 1, 1}) : gamma;
  Tensor<T> norm = conv2d(square(x), gamma_k, beta, 1, PadSpec::Same());
  for (T v : norm.data())
    if (v <= T(0)) throw NumericError("gdn: non-positive divisor");
  Tensor<T> root = sqrt(norm);
  return inverse ? mul(x, root) : div(x, root);
}

}  // namespace clc

#endif
