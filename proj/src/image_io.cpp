#include "clcodec/image.hpp"

#include <png.h>

#include <cstring>
#include <fstream>

#include "clcodec/checkpoint.hpp"

namespace clc {

namespace {

uint8_t to_byte(double v) {
  double s = std::round(v * 255.0);
  return static_cast<uint8_t>(s < 0 ? 0 : (s > 255 ? 255 : s));
}

ImageRGB from_interleaved(const std::vector<uint8_t>& rgb, int64_t w, int64_t h) {
  ImageRGB img(w, h);
  int64_t n = w * h;
  for (int64_t i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c)
      img.planes[static_cast<size_t>(c * n + i)] = rgb[static_cast<size_t>(3 * i + c)] / 255.0;
  return img;
}

std::vector<uint8_t> to_interleaved(const ImageRGB& img) {
  int64_t n = img.pixel_count();
  std::vector<uint8_t> rgb(static_cast<size_t>(3 * n));
  for (int64_t i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c)
      rgb[static_cast<size_t>(3 * i + c)] = to_byte(img.planes[static_cast<size_t>(c * n + i)]);
  return rgb;
}

struct PngReadState {
  const uint8_t* data;
  size_t size, pos;
};

void png_mem_read(png_structp png, png_bytep out, png_size_t count) {
  auto* st = static_cast<PngReadState*>(png_get_io_ptr(png));
  if (st->pos + count > st->size) png_error(png, "png: unexpected end of data");
  std::memcpy(out, st->data + st->pos, count);
  st->pos += count;
}

void png_mem_write(png_structp png, png_bytep data, png_size_t count) {
  auto* out = static_cast<std::vector<uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + count);
}

void png_mem_flush(png_structp) {}

ImageRGB read_ppm(const std::vector<uint8_t>& bytes) {
  // Binary P6, 8-bit.
  size_t pos = 0;
  auto token = [&]() -> std::string {
    while (pos < bytes.size() && (std::isspace(bytes[pos]) || bytes[pos] == '#')) {
      if (bytes[pos] == '#')
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      else
        ++pos;
    }
    std::string t;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) t.push_back(static_cast<char>(bytes[pos++]));
    return t;
  };
  if (token() != "P6") throw FormatError("ppm: expected P6");
  int64_t w = std::stoll(token());
  int64_t h = std::stoll(token());
  int64_t maxval = std::stoll(token());
  if (w < 1 || h < 1 || maxval != 255) throw FormatError("ppm: unsupported header");
  ++pos;  // single whitespace after maxval
  if (pos + static_cast<size_t>(3 * w * h) > bytes.size()) throw FormatError("ppm: truncated data");
  std::vector<uint8_t> rgb(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                           bytes.begin() + static_cast<std::ptrdiff_t>(pos + 3 * w * h));
  return from_interleaved(rgb, w, h);
}

std::string write_ppm(const ImageRGB& img) {
  std::string s = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  auto rgb = to_interleaved(img);
  s.append(reinterpret_cast<const char*>(rgb.data()), rgb.size());
  return s;
}

}  // namespace

ImageRGB decode_png_bytes(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0)
    throw FormatError("png: bad signature");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw FormatError("png: init failed");
  png_infop info = png_create_info_struct(png);
  std::vector<std::vector<uint8_t>> rows;
  ImageRGB img;
  PngReadState st{bytes.data(), bytes.size(), 0};
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("png: decode failed");
  }
  png_set_read_fn(png, &st, png_mem_read);
  png_read_info(png, info);
  png_uint_32 w = png_get_image_width(png, info);
  png_uint_32 h = png_get_image_height(png, info);
  // Normalize everything to 8-bit RGB.
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  if (png_get_rowbytes(png, info) != 3 * w) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("png: unexpected row layout");
  }
  std::vector<uint8_t> data(static_cast<size_t>(3) * w * h);
  std::vector<png_bytep> row_ptrs(h);
  for (png_uint_32 y = 0; y < h; ++y) row_ptrs[y] = data.data() + static_cast<size_t>(3) * w * y;
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return from_interleaved(data, w, h);
}

std::vector<uint8_t> encode_png_bytes(const ImageRGB& img) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw FormatError("png: init failed");
  png_infop info = png_create_info_struct(png);
  std::vector<uint8_t> out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw FormatError("png: encode failed");
  }
  png_set_write_fn(png, &out, png_mem_write, png_mem_flush);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  auto data = to_interleaved(img);
  for (int64_t y = 0; y < img.height; ++y)
    png_write_row(png, data.data() + 3 * img.width * y);
  png_write_end(png, info);
  png_destroy_write_struct(&png, &info);
  return out;
}

ImageRGB read_image(const std::string& path) {
  auto bytes = read_file(path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return read_ppm(bytes);
  return decode_png_bytes(bytes);
}

void write_image(const std::string& path, const ImageRGB& img) {
  if (img.width < 1 || img.height < 1) throw UsageError("write_image: empty image");
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".ppm") == 0) {
    write_file_atomic(path, write_ppm(img));
    return;
  }
  auto png = encode_png_bytes(img);
  write_file_atomic(path, std::string(png.begin(), png.end()));
}

}  // namespace clc
