#ifndef CLCODEC_ENTROPY_HPP
#define CLCODEC_ENTROPY_HPP

#include <array>
#include <cmath>
#include <cstdint>

#include "clcodec/nn.hpp"
#include "clcodec/range_coder.hpp"

namespace clc {

constexpr double kTailMass = 1e-9;
constexpr double kSigmaFloor = 0.11;
constexpr double kSigmaMax = 64.0;
constexpr int kGaussScales = 64;

inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / 1.4142135623730951); }

// ---------------------------------------------------------------------------
// Integer CDF tables (probabilities quantized to 1<<16, every symbol >= 1).
// The last symbol is the escape: out-of-alphabet values are coded as the
// escape followed by 32 raw bits.

struct CdfTable {
  int32_t vmin = 0;  // value mapped to symbol 0
  std::vector<uint32_t> cdf;  // size nsym + 1; cdf.front() = 0, cdf.back() = 1<<16

  int nsym() const { return static_cast<int>(cdf.size()) - 1; }
  int escape_symbol() const { return nsym() - 1; }
  uint32_t freq(int sym) const {
    return cdf[static_cast<size_t>(sym + 1)] - cdf[static_cast<size_t>(sym)];
  }
  bool contains(int64_t v) const {
    return v >= vmin && v < vmin + nsym() - 1;  // escape excluded
  }
  int symbol_for(int64_t v) const { return static_cast<int>(v - vmin); }

  // Information content of one coded value, including the escape path.
  double bits_for_value(int64_t v) const {
    if (contains(v))
      return -std::log2(static_cast<double>(freq(symbol_for(v))) / kProbTotal);
    return -std::log2(static_cast<double>(freq(escape_symbol())) / kProbTotal) + 32.0;
  }

  int find_symbol(uint32_t f) const {
    // cdf is monotone; binary search for the interval containing f.
    int lo = 0, hi = nsym() - 1;
    while (lo < hi) {
      int mid = (lo + hi + 1) / 2;
      if (cdf[static_cast<size_t>(mid)] <= f) lo = mid;
      else hi = mid - 1;
    }
    return lo;
  }
};

// Quantizes bin probabilities (escape mass appended) so frequencies sum to
// exactly 1<<16 with a floor of 1.
inline CdfTable build_cdf_table(int32_t vmin, const std::vector<double>& probs,
                                double escape_mass) {
  std::vector<double> p = probs;
  p.push_back(std::max(escape_mass, 1e-12));
  double total = 0;
  for (double v : p) total += v;
  size_t n = p.size();
  std::vector<int64_t> freq(n);
  int64_t sum = 0;
  for (size_t i = 0; i < n; ++i) {
    freq[i] = std::max<int64_t>(1, llround(p[i] / total * kProbTotal));
    sum += freq[i];
  }
  // Settle the rounding difference on the largest entries, never below 1.
  while (sum != kProbTotal) {
    size_t target = 0;
    if (sum < kProbTotal) {
      for (size_t i = 1; i < n; ++i)
        if (freq[i] > freq[target]) target = i;
      freq[target] += kProbTotal - sum;
      sum = kProbTotal;
    } else {
      for (size_t i = 1; i < n; ++i)
        if (freq[i] > freq[target]) target = i;
      int64_t take = std::min(freq[target] - 1, sum - kProbTotal);
      if (take <= 0) throw NumericError("cdf table: alphabet too large for 16-bit precision");
      freq[target] -= take;
      sum -= take;
    }
  }
  CdfTable t;
  t.vmin = vmin;
  t.cdf.resize(n + 1, 0);
  for (size_t i = 0; i < n; ++i) t.cdf[i + 1] = t.cdf[i] + static_cast<uint32_t>(freq[i]);
  return t;
}

// ---------------------------------------------------------------------------
// Zero-mean Gaussian conditional with a 64-entry log-spaced scale table on
// [0.11, 64]. Tables are a deterministic function of nothing but constants,
// shared verbatim by encoder and decoder.

class GaussianConditional {
 public:
  GaussianConditional() {
    double lmin = std::log(kSigmaFloor), lmax = std::log(kSigmaMax);
    for (int i = 0; i < kGaussScales; ++i) {
      double s = std::exp(lmin + (lmax - lmin) * i / (kGaussScales - 1));
      scales_[static_cast<size_t>(i)] = s;
      tables_[static_cast<size_t>(i)] = build_for_scale(s);
    }
  }

  // Smallest table entry at or above sigma (clamped to the table range).
  int scale_index(double sigma) const {
    int lo = 0, hi = kGaussScales - 1;
    if (sigma <= scales_[0]) return 0;
    if (sigma >= scales_[kGaussScales - 1]) return kGaussScales - 1;
    while (lo < hi) {
      int mid = (lo + hi) / 2;
      if (scales_[static_cast<size_t>(mid)] >= sigma) hi = mid;
      else lo = mid + 1;
    }
    return lo;
  }

  double scale(int idx) const { return scales_[static_cast<size_t>(idx)]; }
  const CdfTable& table(int idx) const { return tables_[static_cast<size_t>(idx)]; }

 private:
  static CdfTable build_for_scale(double sigma) {
    int64_t radius = 0;
    while (std_normal_cdf(-(double(radius) + 0.5) / sigma) * 2.0 > kTailMass &&
           radius < (1 << 14))
      ++radius;
    std::vector<double> probs;
    probs.reserve(static_cast<size_t>(2 * radius + 1));
    double covered = 0;
    for (int64_t v = -radius; v <= radius; ++v) {
      double p = std_normal_cdf((double(v) + 0.5) / sigma) -
                 std_normal_cdf((double(v) - 0.5) / sigma);
      p = std::max(p, kTailMass);
      probs.push_back(p);
      covered += p;
    }
    return build_cdf_table(static_cast<int32_t>(-radius), probs,
                           std::max(1.0 - covered, kTailMass));
  }

  std::array<double, kGaussScales> scales_{};
  std::array<CdfTable, kGaussScales> tables_{};
};

inline const GaussianConditional& gaussian_conditional() {
  static const GaussianConditional g;
  return g;
}

// Differentiable unit-bin likelihood under N(0, sigma^2); sigma below the
// floor is clamped, the result is floored at the tail mass.
template <typename T>
Tensor<T> gaussian_bin_likelihood(const Tensor<T>& v, const Tensor<T>& sigma) {
  const T inv_sqrt2 = T(0.7071067811865476);
  Tensor<T> s = clamp_min(sigma, T(kSigmaFloor));
  Tensor<T> up = div(affine(v, T(1), T(0.5)), s);
  Tensor<T> lo = div(affine(v, T(1), T(-0.5)), s);
  Tensor<T> p = affine(sub(erf(affine(up, inv_sqrt2, T(0))), erf(affine(lo, inv_sqrt2, T(0)))),
                       T(0.5), T(0));
  return clamp_min(p, T(kTailMass));
}

// ---------------------------------------------------------------------------
// Factorized prior: per-channel univariate CDF built from a 4-stage monotone
// chain (dims 1-3-3-3-1), matrices constrained positive via softplus and
// gates to (-1,1) via tanh. Initialized so the untrained density is logistic
// with scale ~10; biases draw from U(-0.5, 0.5).

namespace detail {

constexpr std::array<int, 5> kFactDims = {1, 3, 3, 3, 1};
constexpr int kFactStages = 4;

inline double stable_softplus(double raw) {
  return raw > 30.0 ? raw : std::log1p(std::exp(raw));
}

struct FactorizedChainEval {
  std::array<std::array<double, 3>, 5> h;       // activations entering each stage
  std::array<std::array<double, 3>, 4> preact;  // a_k before gating
  double logit = 0;
};

template <typename T>
void run_factorized_chain(const std::array<Tensor<T>, 4>& matrices,
                          const std::array<Tensor<T>, 4>& biases,
                          const std::array<Tensor<T>, 3>& gates, int64_t c, double u,
                          FactorizedChainEval& ev) {
  ev.h[0] = {u, 0, 0};
  for (int k = 0; k < kFactStages; ++k) {
    int din = kFactDims[static_cast<size_t>(k)], dout = kFactDims[static_cast<size_t>(k) + 1];
    for (int i = 0; i < dout; ++i) {
      double acc = static_cast<double>(
          biases[static_cast<size_t>(k)].data()[static_cast<size_t>(c * dout + i)]);
      for (int j = 0; j < din; ++j) {
        double raw = static_cast<double>(
            matrices[static_cast<size_t>(k)]
                .data()[static_cast<size_t>((c * dout + i) * din + j)]);
        acc += stable_softplus(raw) * ev.h[static_cast<size_t>(k)][static_cast<size_t>(j)];
      }
      ev.preact[static_cast<size_t>(k)][static_cast<size_t>(i)] = acc;
      double out = acc;
      if (k < kFactStages - 1) {
        double gt = std::tanh(static_cast<double>(
            gates[static_cast<size_t>(k)].data()[static_cast<size_t>(c * dout + i)]));
        out = acc + gt * std::tanh(acc);
      }
      ev.h[static_cast<size_t>(k) + 1][static_cast<size_t>(i)] = out;
    }
  }
  ev.logit = ev.h[kFactStages][0];
}

}  // namespace detail

template <typename T>
struct FactorizedPrior {
  static constexpr int kStages = 4;
  static constexpr std::array<int, 5> kDims = {1, 3, 3, 3, 1};
  static constexpr double kInitScale = 10.0;

  int64_t channels = 0;
  std::array<Tensor<T>, 4> matrices;  // (C, dout, din), raw
  std::array<Tensor<T>, 4> biases;    // (C, dout)
  std::array<Tensor<T>, 3> gates;     // (C, dout), raw

  FactorizedPrior() = default;

  FactorizedPrior(ParamSet<T>& ps, const std::string& prefix, int64_t ch, Rng& rng)
      : channels(ch) {
    double scale = std::pow(kInitScale, 1.0 / kStages);
    for (int k = 0; k < kStages; ++k) {
      int64_t din = kDims[static_cast<size_t>(k)], dout = kDims[static_cast<size_t>(k) + 1];
      T minit = static_cast<T>(softplus_inv(1.0 / (scale * double(dout))));
      matrices[static_cast<size_t>(k)] = ps.add(
          prefix + ".matrix" + std::to_string(k),
          Tensor<T>::filled({ch, dout, din}, minit));
      std::vector<T> b(static_cast<size_t>(ch * dout));
      for (auto& x : b) x = static_cast<T>(rng.uniform(-0.5, 0.5));
      biases[static_cast<size_t>(k)] = ps.add(prefix + ".bias" + std::to_string(k),
                                              Tensor<T>::from_vector({ch, dout}, std::move(b)));
      if (k < kStages - 1)
        gates[static_cast<size_t>(k)] =
            ps.add(prefix + ".gate" + std::to_string(k), Tensor<T>::zeros({ch, dout}));
    }
  }

  // Continuous CDF at x for one channel (double precision, no tape).
  double cdf(int64_t channel, double x) const {
    detail::FactorizedChainEval ev;
    detail::run_factorized_chain<T>(matrices, biases, gates, channel, x, ev);
    return 1.0 / (1.0 + std::exp(-ev.logit));
  }

  // Integer alphabet wide enough that each tail is below kTailMass/2.
  void value_range(int64_t channel, int32_t& vmin, int32_t& vmax) const {
    int32_t lo = 0, hi = 0;
    while (cdf(channel, double(lo) - 0.5) > kTailMass / 2 && lo > -(1 << 14)) --lo;
    while (1.0 - cdf(channel, double(hi) + 0.5) > kTailMass / 2 && hi < (1 << 14)) ++hi;
    vmin = lo;
    vmax = hi;
  }

  CdfTable build_table(int64_t channel) const {
    int32_t vmin, vmax;
    value_range(channel, vmin, vmax);
    std::vector<double> probs;
    probs.reserve(static_cast<size_t>(vmax - vmin + 1));
    double covered = 0;
    for (int32_t v = vmin; v <= vmax; ++v) {
      double p = cdf(channel, double(v) + 0.5) - cdf(channel, double(v) - 0.5);
      p = std::max(p, kTailMass);
      probs.push_back(p);
      covered += p;
    }
    return build_cdf_table(vmin, probs, std::max(1.0 - covered, kTailMass));
  }

  std::vector<CdfTable> build_tables() const {
    std::vector<CdfTable> ts;
    ts.reserve(static_cast<size_t>(channels));
    for (int64_t c = 0; c < channels; ++c) ts.push_back(build_table(c));
    return ts;
  }

  Tensor<T> bin_likelihood(const Tensor<T>& x) const;
};

// Fused bin-likelihood op: p = CDF(x + 0.5) - CDF(x - 0.5) with analytic
// gradients into x and every chain parameter; the tail floor zeroes the
// gradient of floored elements.
template <typename T>
Tensor<T> FactorizedPrior<T>::bin_likelihood(const Tensor<T>& x) const {
  const Shape& s = x.shape();
  if (s.size() != 4 || s[1] != channels)
    throw DimensionError("factorized likelihood: channel mismatch");
  const int64_t N = s[0], C = s[1], HW = s[2] * s[3];

  std::vector<T> out(x.data().size());
  for (int64_t n = 0; n < N; ++n)
    for (int64_t c = 0; c < C; ++c)
      for (int64_t i = 0; i < HW; ++i) {
        size_t idx = static_cast<size_t>((n * C + c) * HW + i);
        double v = static_cast<double>(x.data()[idx]);
        detail::FactorizedChainEval up, lo;
        detail::run_factorized_chain<T>(matrices, biases, gates, c, v + 0.5, up);
        detail::run_factorized_chain<T>(matrices, biases, gates, c, v - 0.5, lo);
        double p = 1.0 / (1.0 + std::exp(-up.logit)) - 1.0 / (1.0 + std::exp(-lo.logit));
        out[idx] = static_cast<T>(std::max(p, kTailMass));
      }

  std::vector<Tensor<T>> parents = {x};
  for (auto& t : matrices) parents.push_back(t);
  for (auto& t : biases) parents.push_back(t);
  for (auto& t : gates) parents.push_back(t);

  // The closure keeps its own handles so node lifetime never depends on the
  // prior object.
  auto mats = matrices;
  auto bias_t = biases;
  auto gates_t = gates;
  auto bwd = [mats, bias_t, gates_t, N, C, HW](detail::Node<T>& self) {
    detail::Node<T>& px = *self.parents[0];
    // parents: x, matrices[0..3] at 1..4, biases[0..3] at 5..8, gates[0..2] at 9..11
    auto mat = [&](int k) -> detail::Node<T>& { return *self.parents[static_cast<size_t>(1 + k)]; };
    auto bia = [&](int k) -> detail::Node<T>& { return *self.parents[static_cast<size_t>(5 + k)]; };
    auto gat = [&](int k) -> detail::Node<T>& { return *self.parents[static_cast<size_t>(9 + k)]; };
    if (px.requires_grad) px.ensure_grad();
    for (int k = 0; k < detail::kFactStages; ++k) {
      if (mat(k).requires_grad) mat(k).ensure_grad();
      if (bia(k).requires_grad) bia(k).ensure_grad();
      if (k < detail::kFactStages - 1 && gat(k).requires_grad) gat(k).ensure_grad();
    }
    for (int64_t n = 0; n < N; ++n)
      for (int64_t c = 0; c < C; ++c)
        for (int64_t i = 0; i < HW; ++i) {
          size_t idx = static_cast<size_t>((n * C + c) * HW + i);
          double g = static_cast<double>(self.grad[idx]);
          if (g == 0.0) continue;
          if (static_cast<double>(self.value[idx]) <= kTailMass) continue;  // floored
          double v = static_cast<double>(px.value[idx]);
          // One backprop per chain endpoint, opposite signs.
          for (int side = 0; side < 2; ++side) {
            detail::FactorizedChainEval ev;
            double u = side == 0 ? v + 0.5 : v - 0.5;
            detail::run_factorized_chain<T>(mats, bias_t, gates_t, c, u, ev);
            double sig = 1.0 / (1.0 + std::exp(-ev.logit));
            double dl = (side == 0 ? g : -g) * sig * (1.0 - sig);
            std::array<double, 3> dh{dl, 0, 0};
            for (int k = detail::kFactStages - 1; k >= 0; --k) {
              int din = detail::kFactDims[static_cast<size_t>(k)],
                  dout = detail::kFactDims[static_cast<size_t>(k) + 1];
              std::array<double, 3> da{}, dh_prev{};
              for (int ii = 0; ii < dout; ++ii) {
                double d = dh[static_cast<size_t>(ii)];
                if (k < detail::kFactStages - 1) {
                  double graw = static_cast<double>(
                      gat(k).value[static_cast<size_t>(c * dout + ii)]);
                  double gt = std::tanh(graw);
                  double ta = std::tanh(ev.preact[static_cast<size_t>(k)][static_cast<size_t>(ii)]);
                  if (gat(k).requires_grad)
                    gat(k).grad[static_cast<size_t>(c * dout + ii)] +=
                        static_cast<T>(d * ta * (1.0 - gt * gt));
                  d = d * (1.0 + gt * (1.0 - ta * ta));
                }
                da[static_cast<size_t>(ii)] = d;
                if (bia(k).requires_grad)
                  bia(k).grad[static_cast<size_t>(c * dout + ii)] += static_cast<T>(d);
              }
              for (int ii = 0; ii < dout; ++ii) {
                for (int j = 0; j < din; ++j) {
                  size_t mi = static_cast<size_t>((c * dout + ii) * din + j);
                  double raw = static_cast<double>(mat(k).value[mi]);
                  if (mat(k).requires_grad) {
                    double dsoft = 1.0 / (1.0 + std::exp(-raw));
                    mat(k).grad[mi] += static_cast<T>(
                        da[static_cast<size_t>(ii)] *
                        ev.h[static_cast<size_t>(k)][static_cast<size_t>(j)] * dsoft);
                  }
                  dh_prev[static_cast<size_t>(j)] +=
                      detail::stable_softplus(raw) * da[static_cast<size_t>(ii)];
                }
              }
              dh = dh_prev;
            }
            if (px.requires_grad) px.grad[idx] += static_cast<T>(dh[0]);
          }
        }
  };
  return detail::make_result<T>(s, std::move(out), "factorized_likelihood", std::move(parents),
                                bwd);
}

// ---------------------------------------------------------------------------
// Table-based rate accounting (matches what the coder will actually spend).

struct RateBreakdown {
  double total_bits = 0;
  std::vector<double> channel_bits;
};

template <typename T>
RateBreakdown rate_from_tables_factorized(const Tensor<T>& z,
                                          const std::vector<CdfTable>& tables) {
  const Shape& s = z.shape();
  RateBreakdown r;
  r.channel_bits.assign(static_cast<size_t>(s[1]), 0.0);
  int64_t HW = s[2] * s[3];
  for (int64_t n = 0; n < s[0]; ++n)
    for (int64_t c = 0; c < s[1]; ++c)
      for (int64_t i = 0; i < HW; ++i) {
        int64_t v = llround(static_cast<double>(z.data()[static_cast<size_t>((n * s[1] + c) * HW + i)]));
        double bits = tables[static_cast<size_t>(c)].bits_for_value(v);
        r.channel_bits[static_cast<size_t>(c)] += bits;
        r.total_bits += bits;
      }
  return r;
}

template <typename T>
RateBreakdown rate_from_tables_gaussian(const Tensor<T>& y, const Tensor<T>& sigma,
                                        const GaussianConditional& gc) {
  if (y.shape() != sigma.shape()) throw DimensionError("rate: sigma shape mismatch");
  const Shape& s = y.shape();
  RateBreakdown r;
  r.channel_bits.assign(static_cast<size_t>(s[1]), 0.0);
  int64_t HW = s[2] * s[3];
  for (int64_t n = 0; n < s[0]; ++n)
    for (int64_t c = 0; c < s[1]; ++c)
      for (int64_t i = 0; i < HW; ++i) {
        size_t idx = static_cast<size_t>((n * s[1] + c) * HW + i);
        int64_t v = llround(static_cast<double>(y.data()[idx]));
        int si = gc.scale_index(static_cast<double>(sigma.data()[idx]));
        double bits = gc.table(si).bits_for_value(v);
        r.channel_bits[static_cast<size_t>(c)] += bits;
        r.total_bits += bits;
      }
  return r;
}

}  // namespace clc

#endif
