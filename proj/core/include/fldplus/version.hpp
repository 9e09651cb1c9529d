#pragma once

#include <string_view>

namespace fldplus {

inline constexpr std::string_view kToolName = "fldplus";
inline constexpr std::string_view kToolVersion = "0.1.0";

}  // namespace fldplus
