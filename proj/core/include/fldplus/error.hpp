#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fldplus {

enum class ErrorCode {
  kInvalidArgument,
  kDimensionMismatch,
  kNonFinite,
  kIo,
  kFormat,
  kTruncated,
  kVersion,
  kPrecisionMismatch,
  kDegenerateInput,
  kUndefinedMetric,
  kStaleCache,
  kDecode,
  kInsufficientData,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries a machine-readable code so the
// CLI can emit structured error reports.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) throw Error(code, message);
}

}  // namespace fldplus
