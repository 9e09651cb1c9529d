#include "fldplus/error.hpp"

namespace fldplus {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kNonFinite: return "non_finite";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kVersion: return "version";
    case ErrorCode::kPrecisionMismatch: return "precision_mismatch";
    case ErrorCode::kDegenerateInput: return "degenerate_input";
    case ErrorCode::kUndefinedMetric: return "undefined_metric";
    case ErrorCode::kStaleCache: return "stale_cache";
    case ErrorCode::kDecode: return "decode";
    case ErrorCode::kInsufficientData: return "insufficient_data";
  }
  return "unknown";
}

}  // namespace fldplus
