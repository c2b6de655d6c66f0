#ifndef CLCODEC_COLOR_HPP
#define CLCODEC_COLOR_HPP

#include <array>

#include "clcodec/image.hpp"
#include "clcodec/tensor_ops.hpp"

namespace clc {

// BT.601 full-range, zero-centered chroma:
//   Y = 0.299 R + 0.587 G + 0.114 B, U = (B-Y)/1.772, V = (R-Y)/1.402.
// The inverse below is the exact algebraic inverse.
inline constexpr std::array<std::array<double, 3>, 3> kRgbToYuv = {{
    {0.299, 0.587, 0.114},
    {-0.299 / 1.772, -0.587 / 1.772, 0.886 / 1.772},
    {0.701 / 1.402, -0.587 / 1.402, -0.114 / 1.402},
}};

inline constexpr std::array<std::array<double, 3>, 3> kYuvToRgb = {{
    {1.0, 0.0, 1.402},
    {1.0, -0.114 * 1.772 / 0.587, -0.299 * 1.402 / 0.587},
    {1.0, 1.772, 0.0},
}};

inline void rgb_to_yuv_pixel(double r, double g, double b, double& y, double& u, double& v) {
  y = kRgbToYuv[0][0] * r + kRgbToYuv[0][1] * g + kRgbToYuv[0][2] * b;
  u = kRgbToYuv[1][0] * r + kRgbToYuv[1][1] * g + kRgbToYuv[1][2] * b;
  v = kRgbToYuv[2][0] * r + kRgbToYuv[2][1] * g + kRgbToYuv[2][2] * b;
}

inline void yuv_to_rgb_pixel(double y, double u, double v, double& r, double& g, double& b) {
  r = y + kYuvToRgb[0][2] * v;
  g = y + kYuvToRgb[1][1] * u + kYuvToRgb[1][2] * v;
  b = y + kYuvToRgb[2][1] * u;
}

inline ImageYUV rgb_to_yuv(const ImageRGB& img) {
  ImageYUV out(img.width, img.height);
  int64_t n = img.pixel_count();
  for (int64_t i = 0; i < n; ++i) {
    rgb_to_yuv_pixel(img.planes[static_cast<size_t>(i)], img.planes[static_cast<size_t>(n + i)],
                     img.planes[static_cast<size_t>(2 * n + i)], out.planes[static_cast<size_t>(i)],
                     out.planes[static_cast<size_t>(n + i)],
                     out.planes[static_cast<size_t>(2 * n + i)]);
  }
  return out;
}

// Output clamped to [0,1]; out-of-gamut YUV is legal input.
inline ImageRGB yuv_to_rgb(const ImageYUV& img) {
  ImageRGB out(img.width, img.height);
  int64_t n = img.width * img.height;
  for (int64_t i = 0; i < n; ++i) {
    double r, g, b;
    yuv_to_rgb_pixel(img.planes[static_cast<size_t>(i)], img.planes[static_cast<size_t>(n + i)],
                     img.planes[static_cast<size_t>(2 * n + i)], r, g, b);
    out.planes[static_cast<size_t>(i)] = std::clamp(r, 0.0, 1.0);
    out.planes[static_cast<size_t>(n + i)] = std::clamp(g, 0.0, 1.0);
    out.planes[static_cast<size_t>(2 * n + i)] = std::clamp(b, 0.0, 1.0);
  }
  return out;
}

// Differentiable variants on (N,3,H,W) tensors (no clamping; callers decide).
template <typename T>
Tensor<T> rgb_to_yuv_t(const Tensor<T>& x) {
  return colormat(x, kRgbToYuv);
}

template <typename T>
Tensor<T> yuv_to_rgb_t(const Tensor<T>& x) {
  return colormat(x, kYuvToRgb);
}

// ---------------------------------------------------------------------------
// sRGB -> CIELAB, D65/2deg reference white.

namespace labdetail {
constexpr double kXn = 0.95047, kYn = 1.0, kZn = 1.08883;
constexpr double kDelta3 = 216.0 / 24389.0;   // (6/29)^3
constexpr double kKappa = 24389.0 / 27.0;     // (29/3)^3

inline double srgb_linearize(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

inline double lab_f(double t) {
  return t > kDelta3 ? std::cbrt(t) : (kKappa * t + 16.0) / 116.0;
}
}  // namespace labdetail

struct Lab {
  double L = 0, a = 0, b = 0;
};

inline Lab srgb_to_lab(double r, double g, double b) {
  using namespace labdetail;
  double rl = srgb_linearize(r), gl = srgb_linearize(g), bl = srgb_linearize(b);
  double x = 0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl;
  double y = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl;
  double z = 0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl;
  double fx = lab_f(x / kXn), fy = lab_f(y / kYn), fz = lab_f(z / kZn);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

// Tensor path: input (N,3,H,W) sRGB in [0,1], output (N,3,H,W) Lab planes.
// Singular-op inputs are clamped to the active branch domain so masked-out
// branches stay NaN-free.
template <typename T>
Tensor<T> srgb_to_lab_t(const Tensor<T>& rgb) {
  using namespace labdetail;
  auto linearize = [](const Tensor<T>& c) {
    Tensor<T> m = mask_where(c, [](T v) { return v <= T(0.04045); });
    Tensor<T> low = affine(c, T(1.0 / 12.92), T(0));
    Tensor<T> base = clamp_min(affine(c, T(1.0 / 1.055), T(0.055 / 1.055)), T(0.04));
    return select(m, low, pow_const(base, T(2.4)));
  };
  Tensor<T> lin = linearize(rgb);
  constexpr std::array<std::array<double, 3>, 3> to_xyz_scaled = {{
      {0.4124564 / kXn, 0.3575761 / kXn, 0.1804375 / kXn},
      {0.2126729 / kYn, 0.7151522 / kYn, 0.0721750 / kYn},
      {0.0193339 / kZn, 0.1191920 / kZn, 0.9503041 / kZn},
  }};
  Tensor<T> t = colormat(lin, to_xyz_scaled);
  Tensor<T> m = mask_where(t, [](T v) { return v > T(kDelta3); });
  Tensor<T> f = select(m, pow_const(clamp_min(t, T(kDelta3)), T(1.0 / 3.0)),
                       affine(t, T(kKappa / 116.0), T(16.0 / 116.0)));
  Tensor<T> fx = slice_channels(f, 0, 1);
  Tensor<T> fy = slice_channels(f, 1, 2);
  Tensor<T> fz = slice_channels(f, 2, 3);
  Tensor<T> L = affine(fy, T(116), T(-16));
  Tensor<T> a = affine(sub(fx, fy), T(500), T(0));
  Tensor<T> b = affine(sub(fy, fz), T(200), T(0));
  return concat_channels(concat_channels(L, a), b);
}

}  // namespace clc

#endif
