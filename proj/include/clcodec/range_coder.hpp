#ifndef CLCODEC_RANGE_CODER_HPP
#define CLCODEC_RANGE_CODER_HPP

#include <cstdint>
#include <vector>

#include "clcodec/errors.hpp"

namespace clc {

// 32-bit renormalizing range coder (carry handling via 64-bit low and a
// pending-0xFF cache), 16-bit probability precision. Frequencies come from
// integer CDF tables that sum to exactly 1<<16 with every symbol >= 1.
//
// The first emitted byte is always the initial zero cache; the decoder skips
// it. finish() appends five flush bytes, so the stream overhead is bounded by
// six bytes.

constexpr uint32_t kProbBits = 16;
constexpr uint32_t kProbTotal = 1u << kProbBits;

class RangeEncoder {
 public:
  // cum/freq in [0, 1<<16], freq >= 1, cum + freq <= 1<<16.
  void encode(uint32_t cum, uint32_t freq);

  // Fixed-rate raw bits (bypass path for escape-coded values).
  void encode_raw(uint32_t value, int nbits);

  std::vector<uint8_t> finish();

 private:
  void shift_low();

  uint64_t low_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint8_t cache_ = 0;
  uint64_t cache_size_ = 1;
  std::vector<uint8_t> out_;
};

class RangeDecoder {
 public:
  RangeDecoder(const uint8_t* data, size_t size);

  // Returns a cumulative-frequency position; the caller locates the symbol
  // interval [cdf[s], cdf[s+1]) containing it, then calls decode_update.
  uint32_t decode_freq();
  void decode_update(uint32_t cum, uint32_t freq);

  uint32_t decode_raw(int nbits);

  size_t consumed() const { return pos_; }

 private:
  uint8_t next_byte();

  const uint8_t* data_ = nullptr;
  size_t size_ = 0;
  size_t pos_ = 0;
  int pad_reads_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint32_t code_ = 0;
  uint32_t last_r_ = 0;
};

}  // namespace clc

#endif
