#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "fldplus/features/backbone.hpp"
#include "fldplus/features/feature_map.hpp"
#include "fldplus/features/feature_set.hpp"
#include "fldplus/features/image.hpp"

namespace fldplus::features {

struct ExtractOptions {
  PoolKind pool = PoolKind::kAverage;
  std::size_t workers = 1;
};

// preprocess -> backbone -> 2x2 pool -> flatten for one image.
std::vector<float> image_features(const Backbone& backbone, const Image& image, PoolKind pool);

// Rows follow the input order regardless of the worker count.
FeatureSet extract_images(const Backbone& backbone, const std::vector<Image>& images,
                          const ExtractOptions& options);
FeatureSet extract_files(const Backbone& backbone,
                         const std::vector<std::filesystem::path>& files,
                         const ExtractOptions& options);
FeatureSet extract_directory(const Backbone& backbone, const std::filesystem::path& dir,
                             const ExtractOptions& options);

// Cache produced elsewhere. If its sidecar declares a map_shape (unpooled
// H x W x C maps), rows are pooled and flattened; otherwise rows pass through.
FeatureSet load_precomputed(const std::filesystem::path& cache, PoolKind pool);

}  // namespace fldplus::features
