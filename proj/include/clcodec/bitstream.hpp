#ifndef CLCODEC_BITSTREAM_HPP
#define CLCODEC_BITSTREAM_HPP

#include "clcodec/checkpoint.hpp"
#include "clcodec/model.hpp"

namespace clc {

// On-disk compressed image (all integers little-endian):
//   magic(6)="CLBS01" | version(1) | orig_w(4) | orig_h(4) | padded_w(4) |
//   padded_h(4) | config_id(2) | lambda_id(2) | 4 x [seg_len(4) | seg_bytes]
// Segment order is fixed: z_lum, z_chroma, y_lum, y_chroma.

constexpr char kBitstreamMagic[7] = "CLBS01";
constexpr uint8_t kBitstreamVersion = 1;

struct CompressedImage {
  uint32_t orig_w = 0, orig_h = 0, padded_w = 0, padded_h = 0;
  uint16_t config_id = 0, lambda_id = 0;
  std::array<std::vector<uint8_t>, 4> segments;  // z_L, z_C, y_L, y_C

  std::string serialize() const;
  static CompressedImage parse(const std::vector<uint8_t>& bytes);

  size_t total_bytes() const {
    size_t n = 6 + 1 + 4 * 4 + 2 + 2;
    for (const auto& s : segments) n += 4 + s.size();
    return n;
  }
};

// ---------------------------------------------------------------------------
// Segment coding. Scan order is channel-major, then row-major spatial.

namespace bsdetail {

constexpr int64_t kEscapeValueCap = 1 << 20;

template <typename T>
std::vector<uint8_t> encode_factorized(const Tensor<T>& z, const std::vector<CdfTable>& tables) {
  RangeEncoder enc;
  const Shape& s = z.shape();
  int64_t HW = s[2] * s[3];
  for (int64_t n = 0; n < s[0]; ++n)
    for (int64_t c = 0; c < s[1]; ++c) {
      const CdfTable& t = tables[static_cast<size_t>(c)];
      for (int64_t i = 0; i < HW; ++i) {
        int64_t v = llround(
            static_cast<double>(z.data()[static_cast<size_t>((n * s[1] + c) * HW + i)]));
        if (t.contains(v)) {
          int sym = t.symbol_for(v);
          enc.encode(t.cdf[static_cast<size_t>(sym)], t.freq(sym));
        } else {
          int esc = t.escape_symbol();
          enc.encode(t.cdf[static_cast<size_t>(esc)], t.freq(esc));
          enc.encode_raw(static_cast<uint32_t>(static_cast<int32_t>(v)), 32);
        }
      }
    }
  return enc.finish();
}

template <typename T>
Tensor<T> decode_factorized(const std::vector<uint8_t>& bytes, const Shape& shape,
                            const std::vector<CdfTable>& tables) {
  std::vector<T> out(static_cast<size_t>(shape_numel(shape)));
  if (!out.empty()) {
    RangeDecoder dec(bytes.data(), bytes.size());
    int64_t HW = shape[2] * shape[3];
    for (int64_t n = 0; n < shape[0]; ++n)
      for (int64_t c = 0; c < shape[1]; ++c) {
        const CdfTable& t = tables[static_cast<size_t>(c)];
        for (int64_t i = 0; i < HW; ++i) {
          int sym = t.find_symbol(dec.decode_freq());
          dec.decode_update(t.cdf[static_cast<size_t>(sym)], t.freq(sym));
          int64_t v;
          if (sym == t.escape_symbol()) {
            v = static_cast<int32_t>(dec.decode_raw(32));
            if (std::abs(v) > kEscapeValueCap)
              throw DecodeError("bitstream: implausible escape value");
          } else {
            v = t.vmin + sym;
          }
          out[static_cast<size_t>((n * shape[1] + c) * HW + i)] = static_cast<T>(v);
        }
      }
  }
  return Tensor<T>::from_vector(shape, std::move(out));
}

template <typename T>
std::vector<uint8_t> encode_gaussian(const Tensor<T>& y, const Tensor<T>& sigma) {
  const GaussianConditional& gc = gaussian_conditional();
  RangeEncoder enc;
  const Shape& s = y.shape();
  int64_t total = shape_numel(s);
  for (int64_t i = 0; i < total; ++i) {
    int64_t v = llround(static_cast<double>(y.data()[static_cast<size_t>(i)]));
    const CdfTable& t =
        gc.table(gc.scale_index(static_cast<double>(sigma.data()[static_cast<size_t>(i)])));
    if (t.contains(v)) {
      int sym = t.symbol_for(v);
      enc.encode(t.cdf[static_cast<size_t>(sym)], t.freq(sym));
    } else {
      int esc = t.escape_symbol();
      enc.encode(t.cdf[static_cast<size_t>(esc)], t.freq(esc));
      enc.encode_raw(static_cast<uint32_t>(static_cast<int32_t>(v)), 32);
    }
  }
  return enc.finish();
}

template <typename T>
Tensor<T> decode_gaussian(const std::vector<uint8_t>& bytes, const Tensor<T>& sigma) {
  const GaussianConditional& gc = gaussian_conditional();
  std::vector<T> out(sigma.data().size());
  if (!out.empty()) {
    RangeDecoder dec(bytes.data(), bytes.size());
    for (size_t i = 0; i < out.size(); ++i) {
      const CdfTable& t = gc.table(gc.scale_index(static_cast<double>(sigma.data()[i])));
      int sym = t.find_symbol(dec.decode_freq());
      dec.decode_update(t.cdf[static_cast<size_t>(sym)], t.freq(sym));
      int64_t v;
      if (sym == t.escape_symbol()) {
        v = static_cast<int32_t>(dec.decode_raw(32));
        if (std::abs(v) > kEscapeValueCap)
          throw DecodeError("bitstream: implausible escape value");
      } else {
        v = t.vmin + sym;
      }
      out[i] = static_cast<T>(v);
    }
  }
  return Tensor<T>::from_vector(sigma.shape(), std::move(out));
}

}  // namespace bsdetail

// ---------------------------------------------------------------------------
// Inference wrapper: model plus the prior tables derived from it. Tables are
// a pure function of checkpoint parameters, so encoder and decoder always
// agree.

class Codec {
 public:
  explicit Codec(std::unique_ptr<Model<float>> model, uint16_t lambda_id = 0,
                 LossWeights weights = {1, 0, 0})
      : model_(std::move(model)), lambda_id_(lambda_id), weights_(weights) {
    rebuild_tables();
  }

  static Codec from_checkpoint(const std::string& path) {
    auto loaded = load_checkpoint<float>(path);
    return Codec(std::move(loaded.model), loaded.lambda_id, loaded.weights);
  }

  const Model<float>& model() const { return *model_; }
  Model<float>& mutable_model() { return *model_; }
  uint16_t lambda_id() const { return lambda_id_; }
  const LossWeights& weights() const { return weights_; }
  const std::vector<CdfTable>& lum_tables() const { return lum_tables_; }
  const std::vector<CdfTable>& chroma_tables() const { return chroma_tables_; }

  void rebuild_tables() {
    lum_tables_ = model_->lum.prior.build_tables();
    chroma_tables_ = model_->chroma.prior.build_tables();
  }

  CompressedImage compress(const ImageRGB& img) const {
    LatentBundle<float> b = encode_latents(*model_, img);
    CompressedImage c;
    c.orig_w = static_cast<uint32_t>(b.orig_w);
    c.orig_h = static_cast<uint32_t>(b.orig_h);
    c.padded_w = static_cast<uint32_t>(b.padded_w);
    c.padded_h = static_cast<uint32_t>(b.padded_h);
    c.config_id = model_->cfg.id();
    c.lambda_id = lambda_id_;
    c.segments[0] = bsdetail::encode_factorized(b.z_lum, lum_tables_);
    c.segments[1] = bsdetail::encode_factorized(b.z_chroma, chroma_tables_);
    c.segments[2] = bsdetail::encode_gaussian(b.y_lum, b.sigma_lum);
    c.segments[3] = bsdetail::encode_gaussian(b.y_chroma, b.sigma_chroma);
    return c;
  }

  // Rebuilds the latent bundle exactly from a bitstream.
  LatentBundle<float> decode_bundle(const CompressedImage& c) const {
    NoGradGuard ng;
    if (c.config_id != model_->cfg.id())
      throw FormatError("bitstream: config id does not match checkpoint");
    if (c.padded_w != pad_to_multiple(c.orig_w, 16) ||
        c.padded_h != pad_to_multiple(c.orig_h, 16))
      throw FormatError("bitstream: inconsistent padded dimensions");
    LatentShape ls = latent_shape(c.orig_h, c.orig_w);
    LatentBundle<float> b;
    b.orig_w = c.orig_w;
    b.orig_h = c.orig_h;
    b.padded_w = c.padded_w;
    b.padded_h = c.padded_h;
    b.z_lum = bsdetail::decode_factorized<float>(
        c.segments[0], {1, model_->cfg.hyper_lum, ls.zh, ls.zw}, lum_tables_);
    b.z_chroma = bsdetail::decode_factorized<float>(
        c.segments[1], {1, model_->cfg.hyper_chroma, ls.zh, ls.zw}, chroma_tables_);
    b.sigma_lum = model_->lum.hyper_synthesis(b.z_lum, ls.yh, ls.yw);
    b.sigma_chroma = model_->chroma.hyper_synthesis(b.z_chroma, ls.yh, ls.yw);
    b.y_lum = bsdetail::decode_gaussian<float>(c.segments[2], b.sigma_lum);
    b.y_chroma = bsdetail::decode_gaussian<float>(c.segments[3], b.sigma_chroma);
    return b;
  }

  ImageRGB decompress(const CompressedImage& c) const {
    return decode_latents(*model_, decode_bundle(c));
  }

  BundleRate bundle_rate(const LatentBundle<float>& b) const {
    return estimate_rate_bits(b, lum_tables_, chroma_tables_);
  }

 private:
  std::unique_ptr<Model<float>> model_;
  uint16_t lambda_id_;
  LossWeights weights_;
  std::vector<CdfTable> lum_tables_, chroma_tables_;
};

}  // namespace clc

#endif
