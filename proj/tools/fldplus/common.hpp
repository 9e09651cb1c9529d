#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fldplus/flow/checkpoint.hpp"

namespace fldplus::cli {

// std::map backed, so dumps have sorted keys: the canonical form hashed into
// every artifact.
using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

using Inputs = std::vector<std::pair<std::string, std::string>>;  // label -> sha256

void write_text(const std::filesystem::path& path, std::string_view text);

// tool, version, command, config hash, seed, input hashes, timestamp.
OrderedJson provenance(const std::string& command, const Json& config, std::uint64_t seed,
                       const Inputs& inputs);

void require_file(const std::filesystem::path& path, const std::string& what);
void require_dir(const std::filesystem::path& path, const std::string& what);

// Loads a checkpoint in whichever precision it was saved and hands it to fn.
template <typename Fn>
decltype(auto) with_checkpoint(const std::filesystem::path& path, Fn&& fn) {
  require_file(path, "checkpoint");
  if (flow::checkpoint_precision(path) == io::Precision::kFloat32) {
    return fn(flow::load_flow<float>(path));
  }
  return fn(flow::load_flow<double>(path));
}

}  // namespace fldplus::cli
