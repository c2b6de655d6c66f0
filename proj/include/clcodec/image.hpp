#ifndef CLCODEC_IMAGE_HPP
#define CLCODEC_IMAGE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "clcodec/tensor.hpp"

namespace clc {

// Planar RGB, unit range, 3 x H x W.
struct ImageRGB {
  int64_t width = 0, height = 0;
  std::vector<double> planes;  // [c][y][x]

  ImageRGB() = default;
  ImageRGB(int64_t w, int64_t h) : width(w), height(h), planes(static_cast<size_t>(3 * w * h), 0.0) {}

  double& at(int c, int64_t y, int64_t x) {
    return planes[static_cast<size_t>((c * height + y) * width + x)];
  }
  double at(int c, int64_t y, int64_t x) const {
    return planes[static_cast<size_t>((c * height + y) * width + x)];
  }
  int64_t pixel_count() const { return width * height; }
};

// Planar 4:4:4 YUV; Y in [0,1], U/V zero-centered in [-0.5, 0.5].
struct ImageYUV {
  int64_t width = 0, height = 0;
  std::vector<double> planes;  // [c][y][x], c = Y,U,V

  ImageYUV() = default;
  ImageYUV(int64_t w, int64_t h) : width(w), height(h), planes(static_cast<size_t>(3 * w * h), 0.0) {}

  double& at(int c, int64_t y, int64_t x) {
    return planes[static_cast<size_t>((c * height + y) * width + x)];
  }
  double at(int c, int64_t y, int64_t x) const {
    return planes[static_cast<size_t>((c * height + y) * width + x)];
  }
};

// 8-bit PNG/PPM I/O; values map by /255 on read and round(v*255) with
// clamping on write. Format chosen by extension (.png / .ppm).
ImageRGB read_image(const std::string& path);
void write_image(const std::string& path, const ImageRGB& img);
ImageRGB decode_png_bytes(const std::vector<uint8_t>& bytes);
std::vector<uint8_t> encode_png_bytes(const ImageRGB& img);

template <typename T>
Tensor<T> image_to_tensor(const ImageRGB& img) {
  std::vector<T> v(img.planes.size());
  for (size_t i = 0; i < v.size(); ++i) v[i] = static_cast<T>(img.planes[i]);
  return Tensor<T>::from_vector({1, 3, img.height, img.width}, std::move(v));
}

template <typename T>
Tensor<T> images_to_tensor(const std::vector<ImageRGB>& imgs) {
  if (imgs.empty()) throw UsageError("empty batch");
  int64_t h = imgs[0].height, w = imgs[0].width;
  std::vector<T> v;
  v.reserve(imgs.size() * imgs[0].planes.size());
  for (const auto& img : imgs) {
    if (img.height != h || img.width != w) throw DimensionError("batch images differ in size");
    for (double d : img.planes) v.push_back(static_cast<T>(d));
  }
  return Tensor<T>::from_vector({static_cast<int64_t>(imgs.size()), 3, h, w}, std::move(v));
}

// Extracts batch element n; clamps to [0,1] (decoded-output contract).
template <typename T>
ImageRGB image_from_tensor(const Tensor<T>& t, int64_t n = 0) {
  const Shape& s = t.shape();
  if (s.size() != 4 || s[1] != 3) throw DimensionError("image tensor must be (N,3,H,W)");
  ImageRGB img(s[3], s[2]);
  int64_t plane = 3 * s[2] * s[3];
  for (int64_t i = 0; i < plane; ++i) {
    double v = static_cast<double>(t.data()[static_cast<size_t>(n * plane + i)]);
    img.planes[static_cast<size_t>(i)] = v < 0 ? 0 : (v > 1 ? 1 : v);
  }
  return img;
}

}  // namespace clc

#endif
