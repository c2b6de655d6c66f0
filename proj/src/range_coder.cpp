#include "clcodec/range_coder.hpp"

namespace clc {

namespace {
constexpr uint32_t kTop = 1u << 24;
}

void RangeEncoder::shift_low() {
  if (static_cast<uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
    uint8_t carry = static_cast<uint8_t>(low_ >> 32);
    out_.push_back(static_cast<uint8_t>(cache_ + carry));
    while (--cache_size_ != 0) out_.push_back(static_cast<uint8_t>(0xFF + carry));
    cache_ = static_cast<uint8_t>(low_ >> 24);
  }
  ++cache_size_;
  low_ = (low_ & 0x00FFFFFFu) << 8;
}

void RangeEncoder::encode(uint32_t cum, uint32_t freq) {
  uint32_t r = range_ >> kProbBits;
  low_ += static_cast<uint64_t>(r) * cum;
  range_ = r * freq;
  while (range_ < kTop) {
    shift_low();
    range_ <<= 8;
  }
}

void RangeEncoder::encode_raw(uint32_t value, int nbits) {
  while (nbits > 0) {
    int chunk = nbits > 16 ? 16 : nbits;
    nbits -= chunk;
    uint32_t piece = (value >> nbits) & ((1u << chunk) - 1);
    uint32_t r = range_ >> chunk;
    low_ += static_cast<uint64_t>(r) * piece;
    range_ = r;
    while (range_ < kTop) {
      shift_low();
      range_ <<= 8;
    }
  }
}

std::vector<uint8_t> RangeEncoder::finish() {
  for (int i = 0; i < 5; ++i) shift_low();
  return std::move(out_);
}

RangeDecoder::RangeDecoder(const uint8_t* data, size_t size) : data_(data), size_(size) {
  next_byte();  // initial encoder cache byte
  for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next_byte();
}

uint8_t RangeDecoder::next_byte() {
  if (pos_ < size_) return data_[pos_++];
  // The decoder may look at most a few bytes past a well-formed stream's
  // payload; anything more means truncation.
  if (++pad_reads_ > 4) throw DecodeError("range decoder: truncated stream");
  return 0;
}

uint32_t RangeDecoder::decode_freq() {
  last_r_ = range_ >> kProbBits;
  uint32_t f = code_ / last_r_;
  return f < kProbTotal ? f : kProbTotal - 1;
}

void RangeDecoder::decode_update(uint32_t cum, uint32_t freq) {
  code_ -= last_r_ * cum;
  range_ = last_r_ * freq;
  while (range_ < kTop) {
    code_ = (code_ << 8) | next_byte();
    range_ <<= 8;
  }
}

uint32_t RangeDecoder::decode_raw(int nbits) {
  uint32_t value = 0;
  while (nbits > 0) {
    int chunk = nbits > 16 ? 16 : nbits;
    nbits -= chunk;
    uint32_t r = range_ >> chunk;
    uint32_t piece = code_ / r;
    if (piece >= (1u << chunk)) piece = (1u << chunk) - 1;
    code_ -= r * piece;
    range_ = r;
    while (range_ < kTop) {
      code_ = (code_ << 8) | next_byte();
      range_ <<= 8;
    }
    value = (value << chunk) | piece;
  }
  return value;
}

}  // namespace clc
