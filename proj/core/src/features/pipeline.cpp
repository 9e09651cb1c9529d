#include "fldplus/features/pipeline.hpp"

#include "fldplus/binary_io.hpp"
#include "fldplus/error.hpp"
#include "fldplus/hash.hpp"
#include "fldplus/parallel.hpp"

namespace fldplus::features {

std::vector<float> image_features(const Backbone& backbone, const Image& image, PoolKind pool) {
  const auto input = preprocess(image, backbone.input_height(), backbone.input_width(),
                                backbone.normalization());
  const auto map = backbone.forward(input);
  const auto shape = backbone.output_shape();
  if (map.rank() != 3 || map.dim(0) != shape.height || map.dim(1) != shape.width ||
      map.dim(2) != shape.channels) {
    fail(ErrorCode::kDimensionMismatch, "backbone output " + nn::shape_string(map) +
                                            " does not match its declared shape");
  }
  return flatten(pool2d(map, pool));
}

namespace {

FeatureSet empty_set(const Backbone& backbone, PoolKind pool) {
  FeatureSet set;
  const auto s = backbone.output_shape();
  set.dim = (s.height / 2) * (s.width / 2) * s.channels;
  set.precision = io::Precision::kFloat32;
  set.provenance.backbone = backbone.id();
  set.provenance.pooling = std::string(to_string(pool));
  set.provenance.map_shape = s;
  return set;
}

}  // namespace

FeatureSet extract_images(const Backbone& backbone, const std::vector<Image>& images,
                          const ExtractOptions& options) {
  FeatureSet set = empty_set(backbone, options.pool);
  set.provenance.source = "images";
  set.values.resize(images.size() * set.dim);
  parallel_for(images.size(), options.workers, [&](std::size_t i) {
    const auto f = image_features(backbone, images[i], options.pool);
    std::copy(f.begin(), f.end(), set.values.begin() + static_cast<std::ptrdiff_t>(i * set.dim));
  });
  return set;
}

FeatureSet extract_files(const Backbone& backbone,
                         const std::vector<std::filesystem::path>& files,
                         const ExtractOptions& options) {
  FeatureSet set = empty_set(backbone, options.pool);
  set.provenance.source = "images";
  set.values.resize(files.size() * set.dim);
  std::vector<std::string> hashes(files.size());
  parallel_for(files.size(), options.workers, [&](std::size_t i) {
    const std::string bytes = io::read_file(files[i]);
    hashes[i] = sha256_hex(bytes);
    const auto f = image_features(backbone, decode_image(bytes, files[i].string()), options.pool);
    std::copy(f.begin(), f.end(), set.values.begin() + static_cast<std::ptrdiff_t>(i * set.dim));
  });
  for (const auto& f : files) set.provenance.files.push_back(f.filename().string());
  set.provenance.file_sha256 = std::move(hashes);
  set.provenance.image_list_sha256 =
      hash_file_list(set.provenance.files, set.provenance.file_sha256);
  return set;
}

FeatureSet extract_directory(const Backbone& backbone, const std::filesystem::path& dir,
                             const ExtractOptions& options) {
  const auto files = list_images(dir);
  if (files.empty()) fail(ErrorCode::kInsufficientData, "no PNG/JPEG files in " + dir.string());
  return extract_files(backbone, files, options);
}

FeatureSet load_precomputed(const std::filesystem::path& cache, PoolKind pool) {
  FeatureSet in = read_cache(cache);
  if (!in.provenance.map_shape) {
    in.provenance.source = "precomputed";
    return in;
  }
  const MapShape s = *in.provenance.map_shape;
  if (s.size() != in.dim) {
    fail(ErrorCode::kDimensionMismatch, "precomputed cache rows have dim " + std::to_string(in.dim) +
                                            " but the sidecar declares a " +
                                            std::to_string(s.height) + "x" + std::to_string(s.width) +
                                            "x" + std::to_string(s.channels) + " map");
  }
  FeatureSet out;
  out.dim = (s.height / 2) * (s.width / 2) * s.channels;
  out.precision = in.precision;
  out.provenance = in.provenance;
  out.provenance.source = "precomputed";
  out.provenance.pooling = std::string(to_string(pool));
  out.values.reserve(in.count() * out.dim);
  for (std::size_t r = 0; r < in.count(); ++r) {
    auto row = in.row(r);
    nn::Tensor<float> map({s.height, s.width, s.channels}, std::vector<float>(row.begin(), row.end()));
    const auto pooled = pool2d(map, pool);
    out.values.insert(out.values.end(), pooled.storage().begin(), pooled.storage().end());
  }
  return out;
}

}  // namespace fldplus::features
