#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace stegolab {

enum class Errc {
  invalid_argument,
  dimension_mismatch,
  bad_magic,
  bad_maxval,
  bad_header,
  truncated_data,
  io,
  capacity_exceeded,
  truncated_stream,
  corrupt_stream,
  degenerate_data,
  degenerate_covariance,
  insufficient_statistics,
  singular_matrix,
  zero_coefficient,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::dimension_mismatch: return "dimension_mismatch";
    case Errc::bad_magic: return "bad_magic";
    case Errc::bad_maxval: return "bad_maxval";
    case Errc::bad_header: return "bad_header";
    case Errc::truncated_data: return "truncated_data";
    case Errc::io: return "io";
    case Errc::capacity_exceeded: return "capacity_exceeded";
    case Errc::truncated_stream: return "truncated_stream";
    case Errc::corrupt_stream: return "corrupt_stream";
    case Errc::degenerate_data: return "degenerate_data";
    case Errc::degenerate_covariance: return "degenerate_covariance";
    case Errc::insufficient_statistics: return "insufficient_statistics";
    case Errc::singular_matrix: return "singular_matrix";
    case Errc::zero_coefficient: return "zero_coefficient";
  }
  return "unknown";
}

/// Library-wide exception. `capacity` is set for capacity_exceeded so
/// callers can report the measured limit.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what,
        std::optional<std::size_t> capacity = std::nullopt)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code),
        capacity_(capacity) {}

  Errc code() const noexcept { return code_; }
  std::optional<std::size_t> capacity() const noexcept { return capacity_; }

 private:
  Errc code_;
  std::optional<std::size_t> capacity_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace stegolab
