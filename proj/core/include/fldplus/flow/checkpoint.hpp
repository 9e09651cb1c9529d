#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "fldplus/binary_io.hpp"
#include "fldplus/flow/flow_model.hpp"

namespace fldplus::flow {

inline constexpr std::uint16_t kCheckpointVersion = 1;

// metadata_json is an opaque JSON object stored alongside the config (for
// example a summary of the training-set likelihoods). Empty means none.
template <Real T>
std::string serialize_flow(const FlowModel<T>& model, const std::string& metadata_json = {});

template <Real T>
void save_flow(const std::filesystem::path& path, const FlowModel<T>& model,
               const std::string& metadata_json = {});

template <Real T>
struct LoadedFlow {
  FlowModel<T> model;
  std::string metadata_json;  // "{}" when the checkpoint has none
};

template <Real T>
LoadedFlow<T> deserialize_flow(std::string bytes);

template <Real T>
LoadedFlow<T> load_flow(const std::filesystem::path& path);

// Reads just enough of the header to report the stored precision.
io::Precision checkpoint_precision(const std::filesystem::path& path);

}  // namespace fldplus::flow
