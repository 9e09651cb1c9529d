#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fldplus/binary_io.hpp"
#include "fldplus/features/backbone.hpp"
#include "fldplus/nn/tensor.hpp"

namespace fldplus::features {

struct Provenance {
  std::string source;      // "images", "precomputed", "synthetic", ...
  std::string backbone;    // backbone id, empty when not applicable
  std::string pooling;     // "avg", "max" or empty
  std::optional<MapShape> map_shape;  // backbone map shape before pooling, if known
  std::vector<std::string> files;     // input file names in row order
  std::vector<std::string> file_sha256;
  std::string image_list_sha256;      // hash over (name, content hash) pairs
};

struct FeatureSet {
  std::size_t dim = 0;
  std::vector<double> values;  // count x dim, row-major
  io::Precision precision = io::Precision::kFloat32;
  Provenance provenance;

  std::size_t count() const noexcept { return dim == 0 ? 0 : values.size() / dim; }
  std::span<const double> row(std::size_t i) const { return {values.data() + i * dim, dim}; }

  template <nn::Real T>
  nn::Tensor<T> as_tensor() const;

  // Rows given by index, provenance file lists filtered to match.
  FeatureSet subset(std::span<const std::size_t> rows) const;
};

inline constexpr std::uint16_t kCacheVersion = 1;

std::string encode_cache(const FeatureSet& set);
FeatureSet decode_cache(std::string bytes);

// Writes <path> and the provenance sidecar <path>.json.
void write_cache(const std::filesystem::path& path, const FeatureSet& set);
// The sidecar is optional on read.
FeatureSet read_cache(const std::filesystem::path& path);

std::string provenance_json(const FeatureSet& set);
void apply_provenance_json(const std::string& text, FeatureSet& set);

std::string hash_file_list(const std::vector<std::string>& names,
                           const std::vector<std::string>& hashes);

}  // namespace fldplus::features
