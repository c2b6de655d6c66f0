#include "clcodec/bitstream.hpp"

namespace clc {

std::string CompressedImage::serialize() const {
  std::string s;
  s.append(kBitstreamMagic, 6);
  ckpt::put_u8(s, kBitstreamVersion);
  ckpt::put_u32(s, orig_w);
  ckpt::put_u32(s, orig_h);
  ckpt::put_u32(s, padded_w);
  ckpt::put_u32(s, padded_h);
  ckpt::put_u16(s, config_id);
  ckpt::put_u16(s, lambda_id);
  for (const auto& seg : segments) {
    ckpt::put_u32(s, static_cast<uint32_t>(seg.size()));
    s.append(reinterpret_cast<const char*>(seg.data()), seg.size());
  }
  return s;
}

CompressedImage CompressedImage::parse(const std::vector<uint8_t>& bytes) {
  ckpt::Reader r(bytes.data(), bytes.size());
  std::string magic;
  try {
    magic = r.str(6);
  } catch (const FormatError&) {
    throw FormatError("bitstream: file too short");
  }
  if (magic != std::string(kBitstreamMagic, 6)) throw FormatError("bitstream: bad magic");
  if (r.u8() != kBitstreamVersion) throw FormatError("bitstream: unsupported version");
  CompressedImage c;
  c.orig_w = r.u32();
  c.orig_h = r.u32();
  c.padded_w = r.u32();
  c.padded_h = r.u32();
  c.config_id = r.u16();
  c.lambda_id = r.u16();
  if (c.orig_w == 0 || c.orig_h == 0 || c.padded_w % 16 || c.padded_h % 16)
    throw FormatError("bitstream: bad header dimensions");
  for (auto& seg : c.segments) {
    uint32_t len = r.u32();
    try {
      std::string data = r.str(len);
      seg.assign(data.begin(), data.end());
    } catch (const FormatError&) {
      throw FormatError("bitstream: truncated segment");
    }
  }
  if (r.pos != bytes.size()) throw FormatError("bitstream: trailing bytes");
  return c;
}

}  // namespace clc
