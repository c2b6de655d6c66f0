#ifndef CLCODEC_MODEL_HPP
#define CLCODEC_MODEL_HPP

#include "clcodec/color.hpp"
#include "clcodec/entropy.hpp"
#include "clcodec/metrics.hpp"

namespace clc {

// ---------------------------------------------------------------------------
// Configuration. The architecture is fixed: four 5x5/stride-2 conv+GDN stages
// per analysis transform (CBAM after the last), mirrored synthesis with IGDN
// (CBAM after the first upsampling stage), and a 3-layer hyper path with
// strides 1,2,2. Only the channel widths vary.

struct ModelConfig {
  int64_t lum_channels = 128;
  int64_t chroma_channels = 64;
  int64_t hyper_lum = 128;
  int64_t hyper_chroma = 64;

  static constexpr int64_t kDownsampleFactor = 16;

  static ModelConfig tiny() { return {32, 16, 16, 16}; }
  static ModelConfig full() { return {128, 64, 128, 64}; }

  void validate() const {
    if (lum_channels < 1 || chroma_channels < 1 || hyper_lum < 1 || hyper_chroma < 1)
      throw UsageError("model config: channel counts must be positive");
    if (chroma_channels >= lum_channels)
      throw UsageError("model config: chroma channels must be < luminance channels");
  }

  bool operator==(const ModelConfig&) const = default;

  // Preset ids 1 (tiny) and 2 (full); custom configs hash their fields into
  // the high-bit range so mismatches are detected across files.
  uint16_t id() const {
    if (*this == tiny()) return 1;
    if (*this == full()) return 2;
    uint64_t s = 0xC0FFEE;
    for (int64_t v : {lum_channels, chroma_channels, hyper_lum, hyper_chroma})
      s = splitmix64(s) ^ static_cast<uint64_t>(v);
    return static_cast<uint16_t>(0x8000u | (splitmix64(s) & 0x7FFF));
  }
};

inline int64_t pad_to_multiple(int64_t v, int64_t m) { return (v + m - 1) / m * m; }

struct LatentShape {
  int64_t yh = 0, yw = 0, zh = 0, zw = 0;
};

inline LatentShape latent_shape(int64_t height, int64_t width) {
  LatentShape s;
  s.yh = pad_to_multiple(height, 16) / 16;
  s.yw = pad_to_multiple(width, 16) / 16;
  s.zh = (s.yh + 3) / 4;  // hyper strides 1,2,2
  s.zw = (s.yw + 3) / 4;
  return s;
}

// ---------------------------------------------------------------------------
// Loss configuration (rate is always present; lambdas scale distortion).

struct LossWeights {
  double lambda1 = 0, lambda2 = 0, lambda3 = 0;  // MSE, 1-MS-SSIM, CIEDE2000

  void validate() const {
    if (lambda1 < 0 || lambda2 < 0 || lambda3 < 0)
      throw UsageError("loss weights must be nonnegative");
    if (lambda1 == 0 && lambda2 == 0 && lambda3 == 0)
      throw UsageError("at least one loss weight must be positive");
  }
};

// Presets q1..q4 pair the i-th entries of the lambda grids.
inline LossWeights lambda_preset(int q) {
  static const double l1[] = {0.001, 0.005, 0.01, 0.02};
  static const double l2[] = {0.01, 0.12, 2.4, 4.8};
  static const double l3[] = {0.024, 0.12, 0.24, 0.48};
  if (q < 1 || q > 4) throw UsageError("lambda preset must be q1..q4");
  return {l1[q - 1], l2[q - 1], l3[q - 1]};
}

struct LossBreakdown {
  double total = 0;
  double rate_bpp = 0;
  double mse = 0;
  double msssim_term = 0;  // 1 - MS-SSIM (0 when lambda2 == 0)
  double ciede = 0;        // mean dE00 (0 when lambda3 == 0)
};

// ---------------------------------------------------------------------------
// One luminance or chrominance branch.

template <typename T>
struct Branch {
  int64_t channels = 0, hyper_channels = 0, image_channels = 0;
  std::vector<Conv2dLayer<T>> enc;
  std::vector<GdnLayer<T>> enc_gdn;
  CbamLayer<T> enc_cbam;
  std::vector<TConv2dLayer<T>> dec;
  std::vector<GdnLayer<T>> dec_igdn;
  CbamLayer<T> dec_cbam;
  Conv2dLayer<T> ha0, ha1, ha2;
  TConv2dLayer<T> hs0, hs1, hs2;
  FactorizedPrior<T> prior;

  Branch() = default;
  Branch(ParamSet<T>& ps, const std::string& name, int64_t ch, int64_t hyper_ch,
         int64_t img_ch, Rng& rng)
      : channels(ch), hyper_channels(hyper_ch), image_channels(img_ch) {
    for (int i = 0; i < 4; ++i) {
      int64_t in = i == 0 ? img_ch : ch;
      enc.emplace_back(ps, name + ".analysis.conv" + std::to_string(i), in, ch, 5, 2, rng);
      enc_gdn.emplace_back(ps, name + ".analysis.gdn" + std::to_string(i), ch, false);
    }
    enc_cbam = CbamLayer<T>(ps, name + ".analysis.cbam", ch, rng);
    for (int i = 0; i < 4; ++i) {
      int64_t out = i == 3 ? img_ch : ch;
      dec.emplace_back(ps, name + ".synthesis.tconv" + std::to_string(i), ch, out, 5, 2, rng);
      dec_igdn.emplace_back(ps, name + ".synthesis.igdn" + std::to_string(i), out, true);
    }
    dec_cbam = CbamLayer<T>(ps, name + ".synthesis.cbam", ch, rng);
    ha0 = Conv2dLayer<T>(ps, name + ".hyper_analysis.conv0", ch, hyper_ch, 3, 1, rng);
    ha1 = Conv2dLayer<T>(ps, name + ".hyper_analysis.conv1", hyper_ch, hyper_ch, 5, 2, rng);
    ha2 = Conv2dLayer<T>(ps, name + ".hyper_analysis.conv2", hyper_ch, hyper_ch, 5, 2, rng);
    hs0 = TConv2dLayer<T>(ps, name + ".hyper_synthesis.tconv0", hyper_ch, hyper_ch, 5, 2, rng);
    hs1 = TConv2dLayer<T>(ps, name + ".hyper_synthesis.tconv1", hyper_ch, hyper_ch, 5, 2, rng);
    hs2 = TConv2dLayer<T>(ps, name + ".hyper_synthesis.tconv2", hyper_ch, channels, 3, 1, rng);
    prior = FactorizedPrior<T>(ps, name + ".prior", hyper_ch, rng);
  }

  // Image plane(s) -> latent; spatial dims must be multiples of 16.
  Tensor<T> analysis(const Tensor<T>& x) const {
    if (x.shape()[2] % 16 || x.shape()[3] % 16)
      throw UsageError("analysis input dims must be multiples of 16");
    if (x.shape()[1] != image_channels) throw UsageError("analysis channel mismatch");
    Tensor<T> t = x;
    for (int i = 0; i < 4; ++i) t = enc_gdn[static_cast<size_t>(i)].apply(enc[static_cast<size_t>(i)].apply(t));
    return enc_cbam.apply(t);
  }

  // Latent -> image plane(s); spatial dims scale by 16.
  Tensor<T> synthesis(const Tensor<T>& y) const {
    if (y.shape()[1] != channels) throw UsageError("synthesis channel mismatch");
    Tensor<T> t = dec_igdn[0].apply(dec[0].apply(y));
    t = dec_cbam.apply(t);
    for (int i = 1; i < 4; ++i) t = dec_igdn[static_cast<size_t>(i)].apply(dec[static_cast<size_t>(i)].apply(t));
    return t;
  }

  Tensor<T> hyper_analysis(const Tensor<T>& y) const {
    Tensor<T> t = relu(ha0.apply(abs(y)));
    t = relu(ha1.apply(t));
    return ha2.apply(t);
  }

  // z-hat -> strictly positive scales shaped like the latent (crops the 4x
  // upsampling surplus). The pre-exp activation is capped so float inference
  // cannot overflow.
  Tensor<T> hyper_synthesis(const Tensor<T>& z_hat, int64_t yh, int64_t yw) const {
    Tensor<T> t = relu(hs0.apply(z_hat));
    t = relu(hs1.apply(t));
    t = hs2.apply(t);
    if (t.shape()[2] < yh || t.shape()[3] < yw)
      throw DimensionError("hyper synthesis output smaller than latent");
    if (t.shape()[2] != yh || t.shape()[3] != yw) t = crop(t, 0, 0, yh, yw);
    Tensor<T> sigma = exp(clamp_max(t, T(30)));
    return clamp_min(sigma, static_cast<T>(kSigmaFloor));
  }
};

// ---------------------------------------------------------------------------

enum class QuantizeMode { Noise, Round };

// Noise mode: additive i.i.d. uniform [-0.5, 0.5) (training relaxation).
// Round mode: nearest integer, ties away from zero.
template <typename T>
Tensor<T> quantize(const Tensor<T>& t, QuantizeMode mode, Rng* rng = nullptr) {
  if (mode == QuantizeMode::Noise) {
    if (!rng) throw UsageError("noise quantization requires an rng");
    return add_uniform_noise(t, *rng);
  }
  return round_st(t);
}

template <typename T>
struct Model {
  ModelConfig cfg;
  ParamSet<T> params;
  Branch<T> lum, chroma;

  explicit Model(ModelConfig c = ModelConfig::tiny(), uint64_t seed = 0) : cfg(c) {
    cfg.validate();
    Rng rng(splitmix64(seed));
    lum = Branch<T>(params, "lum", cfg.lum_channels, cfg.hyper_lum, 1, rng);
    chroma = Branch<T>(params, "chroma", cfg.chroma_channels, cfg.hyper_chroma, 2, rng);
  }
};

// ---------------------------------------------------------------------------
// Training forward pass (Lagrangian rate-distortion objective).

template <typename T>
struct TrainForward {
  Tensor<T> loss;  // scalar tape root
  LossBreakdown breakdown;
};

// rgb: (N,3,H,W) in [0,1]; any H,W (reflect-padded internally). Rate is
// normalized by the unpadded pixel count per image.
template <typename T>
TrainForward<T> forward_train_batch(const Model<T>& model, const Tensor<T>& rgb,
                                    const LossWeights& weights, Rng& rng) {
  weights.validate();
  const Shape& s = rgb.shape();
  if (s.size() != 4 || s[1] != 3) throw DimensionError("forward_train expects (N,3,H,W)");
  const int64_t N = s[0], H = s[2], W = s[3];
  const int64_t ph = pad_to_multiple(H, 16), pw = pad_to_multiple(W, 16);

  Tensor<T> x = rgb;
  if (ph != H || pw != W) x = pad_reflect(x, 0, ph - H, 0, pw - W);
  Tensor<T> yuv = rgb_to_yuv_t(x);
  Tensor<T> x_lum = slice_channels(yuv, 0, 1);
  Tensor<T> x_chroma = slice_channels(yuv, 1, 3);

  Tensor<T> y_lum = model.lum.analysis(x_lum);
  Tensor<T> y_chroma = model.chroma.analysis(x_chroma);
  Tensor<T> z_lum = model.lum.hyper_analysis(y_lum);
  Tensor<T> z_chroma = model.chroma.hyper_analysis(y_chroma);

  Tensor<T> zt_lum = quantize(z_lum, QuantizeMode::Noise, &rng);
  Tensor<T> zt_chroma = quantize(z_chroma, QuantizeMode::Noise, &rng);
  Tensor<T> sigma_lum =
      model.lum.hyper_synthesis(zt_lum, y_lum.shape()[2], y_lum.shape()[3]);
  Tensor<T> sigma_chroma =
      model.chroma.hyper_synthesis(zt_chroma, y_chroma.shape()[2], y_chroma.shape()[3]);

  Tensor<T> yt_lum = quantize(y_lum, QuantizeMode::Noise, &rng);
  Tensor<T> yt_chroma = quantize(y_chroma, QuantizeMode::Noise, &rng);

  Tensor<T> rec_lum = model.lum.synthesis(yt_lum);
  Tensor<T> rec_chroma = model.chroma.synthesis(yt_chroma);
  Tensor<T> rec_rgb = yuv_to_rgb_t(concat_channels(rec_lum, rec_chroma));
  if (ph != H || pw != W) rec_rgb = crop(rec_rgb, 0, 0, H, W);
  rec_rgb = clamp(rec_rgb, T(0), T(1));

  // Rate: sum of -log2 likelihood over all four latent sets, per pixel.
  const T inv_ln2 = T(1.4426950408889634);
  Tensor<T> bits = add(
      add(sum(log(gaussian_bin_likelihood(yt_lum, sigma_lum))),
          sum(log(gaussian_bin_likelihood(yt_chroma, sigma_chroma)))),
      add(sum(log(model.lum.prior.bin_likelihood(zt_lum))),
          sum(log(model.chroma.prior.bin_likelihood(zt_chroma)))));
  Tensor<T> rate_bpp = affine(bits, -inv_ln2 / static_cast<T>(N * H * W), T(0));

  Tensor<T> total = rate_bpp;
  LossBreakdown br;
  br.rate_bpp = static_cast<double>(rate_bpp.item());
  if (weights.lambda1 > 0) {
    Tensor<T> m = mean(square(sub(rec_rgb, rgb)));
    br.mse = static_cast<double>(m.item());
    total = add(total, affine(m, static_cast<T>(weights.lambda1), T(0)));
  }
  if (weights.lambda2 > 0) {
    Tensor<T> term = sub(Tensor<T>::scalar(T(1)), ms_ssim_t(rgb, rec_rgb));
    br.msssim_term = static_cast<double>(term.item());
    total = add(total, affine(term, static_cast<T>(weights.lambda2), T(0)));
  }
  if (weights.lambda3 > 0) {
    Tensor<T> de = ciede2000_t(rgb, rec_rgb);
    br.ciede = static_cast<double>(de.item());
    total = add(total, affine(de, static_cast<T>(weights.lambda3), T(0)));
  }
  // Recomposed in double so the breakdown identity is exact in logs.
  br.total = br.rate_bpp + weights.lambda1 * br.mse + weights.lambda2 * br.msssim_term +
             weights.lambda3 * br.ciede;
  if (!std::isfinite(br.total)) throw NumericError("non-finite training loss");
  return {total, br};
}

template <typename T>
TrainForward<T> forward_train(const Model<T>& model, const ImageRGB& img,
                              const LossWeights& weights, uint64_t seed) {
  Rng rng(seed);
  return forward_train_batch(model, image_to_tensor<T>(img), weights, rng);
}

// ---------------------------------------------------------------------------
// Inference paths (round quantization, no tape).

template <typename T>
struct LatentBundle {
  Tensor<T> y_lum, y_chroma;          // rounded latents
  Tensor<T> z_lum, z_chroma;          // rounded hyperlatents
  Tensor<T> sigma_lum, sigma_chroma;  // scales predicted from rounded z
  int64_t orig_w = 0, orig_h = 0, padded_w = 0, padded_h = 0;
};

template <typename T>
LatentBundle<T> encode_latents(const Model<T>& model, const ImageRGB& img) {
  NoGradGuard ng;
  LatentBundle<T> b;
  b.orig_w = img.width;
  b.orig_h = img.height;
  b.padded_w = pad_to_multiple(img.width, 16);
  b.padded_h = pad_to_multiple(img.height, 16);

  Tensor<T> x = image_to_tensor<T>(img);
  if (b.padded_h != img.height || b.padded_w != img.width)
    x = pad_reflect(x, 0, b.padded_h - img.height, 0, b.padded_w - img.width);
  Tensor<T> yuv = rgb_to_yuv_t(x);
  Tensor<T> y_lum = model.lum.analysis(slice_channels(yuv, 0, 1));
  Tensor<T> y_chroma = model.chroma.analysis(slice_channels(yuv, 1, 3));

  b.z_lum = round_st(model.lum.hyper_analysis(y_lum));
  b.z_chroma = round_st(model.chroma.hyper_analysis(y_chroma));
  b.sigma_lum = model.lum.hyper_synthesis(b.z_lum, y_lum.shape()[2], y_lum.shape()[3]);
  b.sigma_chroma =
      model.chroma.hyper_synthesis(b.z_chroma, y_chroma.shape()[2], y_chroma.shape()[3]);
  b.y_lum = round_st(y_lum);
  b.y_chroma = round_st(y_chroma);
  return b;
}

template <typename T>
ImageRGB decode_latents(const Model<T>& model, const LatentBundle<T>& b) {
  NoGradGuard ng;
  if (b.y_lum.shape()[2] * 16 != b.padded_h || b.y_lum.shape()[3] * 16 != b.padded_w)
    throw DimensionError("latent bundle dims inconsistent with padded size");
  Tensor<T> rec_lum = model.lum.synthesis(b.y_lum);
  Tensor<T> rec_chroma = model.chroma.synthesis(b.y_chroma);
  Tensor<T> rgb = yuv_to_rgb_t(concat_channels(rec_lum, rec_chroma));
  if (b.orig_h != b.padded_h || b.orig_w != b.padded_w)
    rgb = crop(rgb, 0, 0, b.orig_h, b.orig_w);
  return image_from_tensor(rgb);  // clamps to [0,1]
}

// Table-based rate estimate for a quantized bundle: total plus per-channel
// breakdowns, matching what the range coder spends (modulo flush bytes).
struct BundleRate {
  double total_bits = 0;
  RateBreakdown y_lum, y_chroma, z_lum, z_chroma;
};

template <typename T>
BundleRate estimate_rate_bits(const LatentBundle<T>& b,
                              const std::vector<CdfTable>& lum_tables,
                              const std::vector<CdfTable>& chroma_tables) {
  BundleRate r;
  const GaussianConditional& gc = gaussian_conditional();
  r.y_lum = rate_from_tables_gaussian(b.y_lum, b.sigma_lum, gc);
  r.y_chroma = rate_from_tables_gaussian(b.y_chroma, b.sigma_chroma, gc);
  r.z_lum = rate_from_tables_factorized(b.z_lum, lum_tables);
  r.z_chroma = rate_from_tables_factorized(b.z_chroma, chroma_tables);
  r.total_bits =
      r.y_lum.total_bits + r.y_chroma.total_bits + r.z_lum.total_bits + r.z_chroma.total_bits;
  return r;
}

}  // namespace clc

#endif
