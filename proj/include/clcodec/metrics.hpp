#ifndef CLCODEC_METRICS_HPP
#define CLCODEC_METRICS_HPP

#include <limits>

#include "clcodec/color.hpp"

namespace clc {

constexpr double kPi = 3.141592653589793238462643383279502884;

// ---------------------------------------------------------------------------
// CIEDE2000 (kL = kC = kH = 1), complete formulation with lightness, chroma,
// hue and rotation terms. Hue handling uses explicit degree-based case
// analysis; validated against the published 34-pair conformance dataset.

inline double ciede2000(const Lab& col1, const Lab& col2) {
  auto d2r = [](double d) { return d * kPi / 180.0; };
  const double pow25_7 = 6103515625.0;  // 25^7

  double c1 = std::hypot(col1.a, col1.b);
  double c2 = std::hypot(col2.a, col2.b);
  double cbar = 0.5 * (c1 + c2);
  double cbar7 = std::pow(cbar, 7.0);
  double g = 0.5 * (1.0 - std::sqrt(cbar7 / (cbar7 + pow25_7)));
  double a1p = (1.0 + g) * col1.a;
  double a2p = (1.0 + g) * col2.a;
  double c1p = std::hypot(a1p, col1.b);
  double c2p = std::hypot(a2p, col2.b);

  auto hue_deg = [](double ap, double b) {
    if (ap == 0.0 && b == 0.0) return 0.0;
    double h = std::atan2(b, ap) * 180.0 / kPi;
    return h < 0.0 ? h + 360.0 : h;
  };
  double h1p = hue_deg(a1p, col1.b);
  double h2p = hue_deg(a2p, col2.b);

  double dlp = col2.L - col1.L;
  double dcp = c2p - c1p;
  double dhp_deg;
  if (c1p * c2p == 0.0) {
    dhp_deg = 0.0;
  } else {
    dhp_deg = h2p - h1p;
    if (dhp_deg > 180.0) dhp_deg -= 360.0;
    else if (dhp_deg < -180.0) dhp_deg += 360.0;
  }
  double dHp = 2.0 * std::sqrt(c1p * c2p) * std::sin(d2r(dhp_deg / 2.0));

  double lbp = 0.5 * (col1.L + col2.L);
  double cbp = 0.5 * (c1p + c2p);
  double hbp;
  if (c1p * c2p == 0.0) {
    hbp = h1p + h2p;
  } else {
    double sum = h1p + h2p;
    if (std::abs(h1p - h2p) <= 180.0) hbp = 0.5 * sum;
    else if (sum < 360.0) hbp = 0.5 * (sum + 360.0);
    else hbp = 0.5 * (sum - 360.0);
  }

  double t = 1.0 - 0.17 * std::cos(d2r(hbp - 30.0)) + 0.24 * std::cos(d2r(2.0 * hbp)) +
             0.32 * std::cos(d2r(3.0 * hbp + 6.0)) - 0.20 * std::cos(d2r(4.0 * hbp - 63.0));
  double dtheta = 30.0 * std::exp(-((hbp - 275.0) / 25.0) * ((hbp - 275.0) / 25.0));
  double cbp7 = std::pow(cbp, 7.0);
  double rc = 2.0 * std::sqrt(cbp7 / (cbp7 + pow25_7));
  double sl = 1.0 + 0.015 * (lbp - 50.0) * (lbp - 50.0) /
                        std::sqrt(20.0 + (lbp - 50.0) * (lbp - 50.0));
  double sc = 1.0 + 0.045 * cbp;
  double sh = 1.0 + 0.015 * cbp * t;
  double rt = -std::sin(d2r(2.0 * dtheta)) * rc;

  double tl = dlp / sl, tc = dcp / sc, th = dHp / sh;
  double radicand = tl * tl + tc * tc + th * th + rt * tc * th;
  return std::sqrt(radicand < 0.0 ? 0.0 : radicand);
}

// Mean per-pixel dE00 after sRGB->Lab on both images.
inline double ciede2000_image(const ImageRGB& x, const ImageRGB& x_hat) {
  if (x.width != x_hat.width || x.height != x_hat.height)
    throw DimensionError("ciede2000_image: size mismatch");
  int64_t n = x.pixel_count();
  double acc = 0;
  for (int64_t i = 0; i < n; ++i) {
    Lab l1 = srgb_to_lab(x.planes[static_cast<size_t>(i)], x.planes[static_cast<size_t>(n + i)],
                         x.planes[static_cast<size_t>(2 * n + i)]);
    Lab l2 = srgb_to_lab(x_hat.planes[static_cast<size_t>(i)],
                         x_hat.planes[static_cast<size_t>(n + i)],
                         x_hat.planes[static_cast<size_t>(2 * n + i)]);
    acc += ciede2000(l1, l2);
  }
  return acc / double(n);
}

inline double mse(const ImageRGB& x, const ImageRGB& y) {
  if (x.width != y.width || x.height != y.height) throw DimensionError("mse: size mismatch");
  double acc = 0;
  for (size_t i = 0; i < x.planes.size(); ++i) {
    double d = x.planes[i] - y.planes[i];
    acc += d * d;
  }
  return acc / double(x.planes.size());
}

// 10*log10(1/MSE) for unit-range images; +inf for identical inputs.
inline double psnr(const ImageRGB& x, const ImageRGB& y) {
  double m = mse(x, y);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / m);
}

inline double ms_ssim_db(double ms_ssim_value) {
  if (ms_ssim_value >= 1.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(1.0 - ms_ssim_value);
}

// ---------------------------------------------------------------------------
// Differentiable MS-SSIM on (N,3,H,W) tensors in [0,1]. 11x11 Gaussian
// window (sigma 1.5), standard 5-scale weights; images too small for five
// scales use the largest feasible count with weights renormalized to 1.

inline const std::vector<double>& msssim_weights() {
  static const std::vector<double> w = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
  return w;
}

inline int msssim_feasible_scales(int64_t h, int64_t w) {
  int scales = 0;
  while (scales < 5 && h >= 11 && w >= 11) {
    ++scales;
    h = (h + 1) / 2;
    w = (w + 1) / 2;
  }
  return scales;
}

template <typename T>
Tensor<T> ms_ssim_t(Tensor<T> x, Tensor<T> y) {
  if (x.shape() != y.shape()) throw DimensionError("ms_ssim: shape mismatch");
  const int64_t H = x.shape()[2], W = x.shape()[3];
  int scales = msssim_feasible_scales(H, W);
  if (scales == 0) throw UsageError("ms_ssim: image smaller than the 11x11 window");

  std::vector<T> win(11);
  double acc = 0;
  for (int i = 0; i < 11; ++i) {
    double d = i - 5.0;
    double g = std::exp(-d * d / (2.0 * 1.5 * 1.5));
    win[static_cast<size_t>(i)] = static_cast<T>(g);
    acc += g;
  }
  for (auto& v : win) v = static_cast<T>(v / acc);

  double wsum = 0;
  for (int s = 0; s < scales; ++s) wsum += msssim_weights()[static_cast<size_t>(s)];

  const T c1 = T(0.01 * 0.01), c2 = T(0.03 * 0.03);
  auto blur = [&win](const Tensor<T>& t) {
    return corr1d_valid(corr1d_valid(t, win, 2), win, 3);
  };

  Tensor<T> total;
  for (int s = 0; s < scales; ++s) {
    if (s > 0) {
      x = avgpool2(x);
      y = avgpool2(y);
    }
    Tensor<T> mx = blur(x);
    Tensor<T> my = blur(y);
    Tensor<T> mxx = mul(mx, mx);
    Tensor<T> myy = mul(my, my);
    Tensor<T> mxy = mul(mx, my);
    Tensor<T> sxx = sub(blur(mul(x, x)), mxx);
    Tensor<T> syy = sub(blur(mul(y, y)), myy);
    Tensor<T> sxy = sub(blur(mul(x, y)), mxy);
    Tensor<T> cs = div(affine(sxy, T(2), c2), add(add(sxx, syy), Tensor<T>::scalar(c2)));
    T weight = static_cast<T>(msssim_weights()[static_cast<size_t>(s)] / wsum);
    Tensor<T> term;
    if (s == scales - 1) {
      Tensor<T> lum = div(affine(mxy, T(2), c1), add(add(mxx, myy), Tensor<T>::scalar(c1)));
      term = relu(global_avg_pool(mul(lum, cs)));
    } else {
      term = relu(global_avg_pool(cs));
    }
    Tensor<T> powed = pow_const(term, weight);
    total = s == 0 ? powed : mul(total, powed);
  }
  return mean(total);
}

inline double ms_ssim(const ImageRGB& x, const ImageRGB& y) {
  NoGradGuard ng;
  return ms_ssim_t(image_to_tensor<double>(x), image_to_tensor<double>(y)).item();
}

// ---------------------------------------------------------------------------
// Differentiable CIEDE2000 on (N,3,H,W) sRGB tensors; returns the mean over
// pixels. Case boundaries carry the left-branch subgradient; zero-chroma
// pixels are routed through masks so no NaN can reach the tape.

template <typename T>
Tensor<T> ciede2000_t(const Tensor<T>& rgb1, const Tensor<T>& rgb2) {
  if (rgb1.shape() != rgb2.shape()) throw DimensionError("ciede2000: shape mismatch");
  const T pow25_7 = T(6103515625.0);
  const T d2r = T(kPi / 180.0);
  auto lab1 = srgb_to_lab_t(rgb1);
  auto lab2 = srgb_to_lab_t(rgb2);
  auto L1 = slice_channels(lab1, 0, 1), A1 = slice_channels(lab1, 1, 2),
       B1 = slice_channels(lab1, 2, 3);
  auto L2 = slice_channels(lab2, 0, 1), A2 = slice_channels(lab2, 1, 2),
       B2 = slice_channels(lab2, 2, 3);

  auto chroma = [](const Tensor<T>& a, const Tensor<T>& b) {
    return sqrt(add(mul(a, a), mul(b, b)));
  };
  Tensor<T> c1 = chroma(A1, B1), c2 = chroma(A2, B2);
  Tensor<T> cbar = affine(add(c1, c2), T(0.5), T(0));
  Tensor<T> cbar7 = pow_const(cbar, T(7));
  Tensor<T> g = affine(sqrt(div(cbar7, cbar7 + pow25_7)), T(-0.5), T(0.5));
  Tensor<T> one_g = g + T(1);
  Tensor<T> a1p = mul(A1, one_g), a2p = mul(A2, one_g);
  Tensor<T> c1p = chroma(a1p, B1), c2p = chroma(a2p, B2);

  auto hue_deg = [&](const Tensor<T>& ap, const Tensor<T>& b, const Tensor<T>& cp) {
    Tensor<T> h = affine(atan2t(b, ap), T(180.0 / kPi), T(0));
    Tensor<T> neg = mask_where(h, [](T v) { return v < T(0); });
    h = add(h, affine(neg, T(360), T(0)));
    Tensor<T> zero = mask_where(cp, [](T v) { return v == T(0); });
    return select(zero, Tensor<T>::zeros(h.shape()), h);
  };
  Tensor<T> h1p = hue_deg(a1p, B1, c1p);
  Tensor<T> h2p = hue_deg(a2p, B2, c2p);

  Tensor<T> dlp = sub(L2, L1);
  Tensor<T> dcp = sub(c2p, c1p);
  Tensor<T> prod = mul(c1p, c2p);
  Tensor<T> zprod = mask_where(prod, [](T v) { return v == T(0); });

  Tensor<T> draw = sub(h2p, h1p);
  Tensor<T> hi = mask_where(draw, [](T v) { return v > T(180); });
  Tensor<T> lo = mask_where(draw, [](T v) { return v < T(-180); });
  Tensor<T> dhp = add(draw, add(affine(hi, T(-360), T(0)), affine(lo, T(360), T(0))));
  dhp = select(zprod, Tensor<T>::zeros(dhp.shape()), dhp);
  Tensor<T> root_prod = sqrt(clamp_min(prod, T(1e-30)));
  Tensor<T> dHp = affine(mul(root_prod, sin(affine(dhp, d2r * T(0.5), T(0)))), T(2), T(0));
  dHp = select(zprod, Tensor<T>::zeros(dHp.shape()), dHp);

  Tensor<T> lbp = affine(add(L1, L2), T(0.5), T(0));
  Tensor<T> cbp = affine(add(c1p, c2p), T(0.5), T(0));
  Tensor<T> hsum = add(h1p, h2p);
  Tensor<T> habs = abs(sub(h1p, h2p));
  Tensor<T> mdiff = mask_where(habs, [](T v) { return v <= T(180); });
  Tensor<T> msum = mask_where(hsum, [](T v) { return v < T(360); });
  Tensor<T> hbp_wrap = select(msum, affine(hsum, T(0.5), T(180)), affine(hsum, T(0.5), T(-180)));
  Tensor<T> hbp = select(mdiff, affine(hsum, T(0.5), T(0)), hbp_wrap);
  hbp = select(zprod, hsum, hbp);

  Tensor<T> trot = add(
      add(add(add(Tensor<T>::filled(hbp.shape(), T(1)),
                  affine(cos(affine(hbp, d2r, T(-30) * d2r)), T(-0.17), T(0))),
              affine(cos(affine(hbp, T(2) * d2r, T(0))), T(0.24), T(0))),
          affine(cos(affine(hbp, T(3) * d2r, T(6) * d2r)), T(0.32), T(0))),
      affine(cos(affine(hbp, T(4) * d2r, T(-63) * d2r)), T(-0.20), T(0)));
  Tensor<T> arg = affine(hbp, T(1.0 / 25.0), T(-275.0 / 25.0));
  Tensor<T> dtheta = affine(exp(neg(mul(arg, arg))), T(30), T(0));
  Tensor<T> cbp7 = pow_const(cbp, T(7));
  Tensor<T> rc = affine(sqrt(div(cbp7, cbp7 + pow25_7)), T(2), T(0));
  Tensor<T> lm50 = lbp - T(50);
  Tensor<T> lm50sq = mul(lm50, lm50);
  Tensor<T> sl = add(Tensor<T>::filled(lm50sq.shape(), T(1)),
                     div(affine(lm50sq, T(0.015), T(0)), sqrt(lm50sq + T(20))));
  Tensor<T> sc = affine(cbp, T(0.045), T(1));
  Tensor<T> sh = add(Tensor<T>::filled(cbp.shape(), T(1)),
                     affine(mul(cbp, trot), T(0.015), T(0)));
  Tensor<T> rt = neg(mul(sin(affine(dtheta, T(2) * d2r, T(0))), rc));

  Tensor<T> tl = div(dlp, sl), tc = div(dcp, sc), th = div(dHp, sh);
  Tensor<T> radicand =
      add(add(mul(tl, tl), mul(tc, tc)), add(mul(th, th), mul(rt, mul(tc, th))));
  return mean(sqrt(clamp_min(radicand, T(0))));
}

// ---------------------------------------------------------------------------

struct MetricReport {
  double mse = 0;
  double psnr = 0;
  double ms_ssim = 0;
  double ms_ssim_db = 0;
  double ciede2000 = 0;
};

inline MetricReport compute_metrics(const ImageRGB& x, const ImageRGB& x_hat) {
  MetricReport r;
  r.mse = mse(x, x_hat);
  r.psnr = psnr(x, x_hat);
  r.ms_ssim = ms_ssim(x, x_hat);
  r.ms_ssim_db = ms_ssim_db(r.ms_ssim);
  r.ciede2000 = ciede2000_image(x, x_hat);
  return r;
}

}  // namespace clc

#endif
