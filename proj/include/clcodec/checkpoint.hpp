#ifndef CLCODEC_CHECKPOINT_HPP
#define CLCODEC_CHECKPOINT_HPP

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "clcodec/model.hpp"

namespace clc {

// Checkpoint container, magic "CLCKPT01". All multi-byte integers are
// little-endian; parameter tensors are 32-bit reals in registration order,
// identified by name. Adam state (moments + step) is optional.

namespace ckpt {

inline void put_u8(std::string& s, uint8_t v) { s.push_back(static_cast<char>(v)); }
inline void put_u16(std::string& s, uint16_t v) {
  s.push_back(static_cast<char>(v & 0xFF));
  s.push_back(static_cast<char>(v >> 8));
}
inline void put_u32(std::string& s, uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_u64(std::string& s, uint64_t v) {
  for (int i = 0; i < 8; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_f32(std::string& s, float v) {
  uint32_t u;
  std::memcpy(&u, &v, 4);
  put_u32(s, u);
}
inline void put_f64(std::string& s, double v) {
  uint64_t u;
  std::memcpy(&u, &v, 8);
  put_u64(s, u);
}

struct Reader {
  const uint8_t* p;
  size_t n, pos = 0;
  Reader(const uint8_t* data, size_t size) : p(data), n(size) {}
  void need(size_t k) const {
    if (pos + k > n) throw FormatError("checkpoint: truncated file");
  }
  uint8_t u8() { need(1); return p[pos++]; }
  uint16_t u16() { need(2); uint16_t v = static_cast<uint16_t>(p[pos] | (p[pos + 1] << 8)); pos += 2; return v; }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | p[pos + static_cast<size_t>(i)];
    pos += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[pos + static_cast<size_t>(i)];
    pos += 8;
    return v;
  }
  float f32() { uint32_t u = u32(); float v; std::memcpy(&v, &u, 4); return v; }
  double f64() { uint64_t u = u64(); double v; std::memcpy(&v, &u, 8); return v; }
  std::string str(size_t k) {
    need(k);
    std::string s(reinterpret_cast<const char*>(p + pos), k);
    pos += k;
    return s;
  }
};

}  // namespace ckpt

constexpr char kCheckpointMagic[9] = "CLCKPT01";

// Atomic write: temp file in the target directory, then rename.
inline void write_file_atomic(const std::string& path, const std::string& bytes) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw UsageError("cannot open for writing: " + tmp);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw UsageError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

inline std::vector<uint8_t> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary | std::ios::ate);
  if (!f) throw UsageError("cannot open: " + path);
  auto size = f.tellg();
  f.seekg(0);
  std::vector<uint8_t> v(static_cast<size_t>(size));
  f.read(reinterpret_cast<char*>(v.data()), size);
  if (!f) throw UsageError("read failed: " + path);
  return v;
}

template <typename T>
std::string serialize_checkpoint(const Model<T>& model, uint16_t lambda_id,
                                 const LossWeights& weights,
                                 const AdamState<T>* adam = nullptr) {
  std::string s;
  s.append(kCheckpointMagic, 8);
  ckpt::put_u16(s, model.cfg.id());
  ckpt::put_u32(s, static_cast<uint32_t>(model.cfg.lum_channels));
  ckpt::put_u32(s, static_cast<uint32_t>(model.cfg.chroma_channels));
  ckpt::put_u32(s, static_cast<uint32_t>(model.cfg.hyper_lum));
  ckpt::put_u32(s, static_cast<uint32_t>(model.cfg.hyper_chroma));
  ckpt::put_u16(s, lambda_id);
  ckpt::put_f64(s, weights.lambda1);
  ckpt::put_f64(s, weights.lambda2);
  ckpt::put_f64(s, weights.lambda3);
  ckpt::put_u32(s, static_cast<uint32_t>(model.params.size()));
  for (const auto& p : model.params.items()) {
    ckpt::put_u16(s, static_cast<uint16_t>(p.name.size()));
    s.append(p.name);
    ckpt::put_u8(s, static_cast<uint8_t>(p.tensor.shape().size()));
    for (int64_t d : p.tensor.shape()) ckpt::put_u32(s, static_cast<uint32_t>(d));
    for (T v : p.tensor.data()) ckpt::put_f32(s, static_cast<float>(v));
  }
  if (adam) {
    ckpt::put_u8(s, 1);
    ckpt::put_u64(s, adam->step);
    ckpt::put_f64(s, adam->lr);
    ckpt::put_f64(s, adam->beta1);
    ckpt::put_f64(s, adam->beta2);
    ckpt::put_f64(s, adam->epsilon);
    for (size_t i = 0; i < adam->m.size(); ++i) {
      for (T v : adam->m[i]) ckpt::put_f32(s, static_cast<float>(v));
      for (T v : adam->v[i]) ckpt::put_f32(s, static_cast<float>(v));
    }
  } else {
    ckpt::put_u8(s, 0);
  }
  return s;
}

template <typename T>
void save_checkpoint(const std::string& path, const Model<T>& model, uint16_t lambda_id,
                     const LossWeights& weights, const AdamState<T>* adam = nullptr) {
  write_file_atomic(path, serialize_checkpoint(model, lambda_id, weights, adam));
}

template <typename T>
struct LoadedCheckpoint {
  std::unique_ptr<Model<T>> model;
  uint16_t lambda_id = 0;
  LossWeights weights;
  bool has_adam = false;
  AdamState<T> adam;
};

template <typename T>
LoadedCheckpoint<T> load_checkpoint(const std::string& path) {
  auto bytes = read_file(path);
  ckpt::Reader r(bytes.data(), bytes.size());
  if (r.str(8) != std::string(kCheckpointMagic, 8))
    throw FormatError("checkpoint: bad magic in " + path);
  LoadedCheckpoint<T> out;
  uint16_t stored_id = r.u16();
  ModelConfig cfg;
  cfg.lum_channels = r.u32();
  cfg.chroma_channels = r.u32();
  cfg.hyper_lum = r.u32();
  cfg.hyper_chroma = r.u32();
  if (cfg.id() != stored_id) throw FormatError("checkpoint: config id mismatch");
  out.lambda_id = r.u16();
  out.weights.lambda1 = r.f64();
  out.weights.lambda2 = r.f64();
  out.weights.lambda3 = r.f64();
  out.model = std::make_unique<Model<T>>(cfg, 0);
  uint32_t count = r.u32();
  if (count != out.model->params.size())
    throw FormatError("checkpoint: parameter count mismatch");
  for (uint32_t i = 0; i < count; ++i) {
    std::string name = r.str(r.u16());
    Tensor<T>* t = out.model->params.find(name);
    if (!t) throw FormatError("checkpoint: unknown parameter " + name);
    uint8_t ndim = r.u8();
    Shape shape(ndim);
    for (auto& d : shape) d = r.u32();
    if (shape != t->shape()) throw FormatError("checkpoint: shape mismatch for " + name);
    for (auto& v : t->data()) v = static_cast<T>(r.f32());
  }
  out.has_adam = r.u8() != 0;
  if (out.has_adam) {
    out.adam.step = r.u64();
    out.adam.lr = r.f64();
    out.adam.beta1 = r.f64();
    out.adam.beta2 = r.f64();
    out.adam.epsilon = r.f64();
    out.adam.init_for(out.model->params);
    for (size_t i = 0; i < out.adam.m.size(); ++i) {
      for (auto& v : out.adam.m[i]) v = static_cast<T>(r.f32());
      for (auto& v : out.adam.v[i]) v = static_cast<T>(r.f32());
    }
  }
  return out;
}

}  // namespace clc

#endif
