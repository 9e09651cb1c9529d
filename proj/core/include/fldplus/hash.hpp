#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace fldplus {

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

// Stable 64-bit seed derived from a base seed and a label (e.g. a file name),
// so per-item random streams do not depend on processing order.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);

}  // namespace fldplus
