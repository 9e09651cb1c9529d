#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "fldplus/features/ops.hpp"
#include "fldplus/features/preprocess.hpp"
#include "fldplus/nn/tensor.hpp"

namespace fldplus::features {

struct MapShape {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;

  std::size_t size() const noexcept { return height * width * channels; }
  bool operator==(const MapShape&) const = default;
};

// A frozen feature extractor: preprocessed C x H x W input -> H x W x C map.
class Backbone {
 public:
  virtual ~Backbone() = default;

  virtual std::string id() const = 0;
  virtual std::size_t input_height() const = 0;
  virtual std::size_t input_width() const = 0;
  virtual ChannelNormalization normalization() const = 0;
  virtual MapShape output_shape() const = 0;
  virtual nn::Tensor<float> forward(const nn::Tensor<float>& chw) const = 0;
};

struct ToyBackboneConfig {
  std::size_t input_size = 256;
  // one 3x3 stride-2 convolution per entry; 256 / 2^5 = 8
  std::vector<std::size_t> channels{32, 64, 128, 256, 512};
  std::uint64_t seed = 0;
};

// Seeded random strided convolutions. ReLU follows every convolution except the
// last, which stays linear so features have no point mass at zero.
class ToyBackbone final : public Backbone {
 public:
  explicit ToyBackbone(ToyBackboneConfig config);

  std::string id() const override;
  std::size_t input_height() const override { return config_.input_size; }
  std::size_t input_width() const override { return config_.input_size; }
  ChannelNormalization normalization() const override { return ChannelNormalization::imagenet(); }
  MapShape output_shape() const override;
  nn::Tensor<float> forward(const nn::Tensor<float>& chw) const override;

  const ToyBackboneConfig& config() const noexcept { return config_; }
  const std::vector<ops::Conv2d>& convs() const noexcept { return convs_; }

 private:
  ToyBackboneConfig config_;
  std::vector<ops::Conv2d> convs_;
};

// Runs a graph file written by tools/export_graph.py. The sidecar JSON
// (<graph>.json) names the input/output values and declares shapes and
// normalization constants.
class GraphBackbone final : public Backbone {
 public:
  static std::unique_ptr<GraphBackbone> load(const std::filesystem::path& graph_path);
  ~GraphBackbone() override;

  std::string id() const override;
  std::size_t input_height() const override;
  std::size_t input_width() const override;
  ChannelNormalization normalization() const override;
  MapShape output_shape() const override;
  nn::Tensor<float> forward(const nn::Tensor<float>& chw) const override;

  // Raw graph evaluation (C x H x W in, C x H x W out), no shape checks.
  nn::Tensor<float> run(const nn::Tensor<float>& chw) const;

 private:
  struct Impl;
  explicit GraphBackbone(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

// "toy", "toy:size=64,channels=16-32-16,seed=3", "graph:<path>".
std::unique_ptr<Backbone> make_backbone(const std::string& spec);

}  // namespace fldplus::features
