#ifndef CLCODEC_ERRORS_HPP
#define CLCODEC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace clc {

// Exit-code mapping used by the CLI: usage/dimension -> 2, format -> 3, numeric -> 4.

struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionError : UsageError {
  explicit DimensionError(const std::string& msg) : UsageError(msg) {}
};

struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DecodeError : FormatError {
  explicit DecodeError(const std::string& msg) : FormatError(msg) {}
};

struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace clc

#endif
