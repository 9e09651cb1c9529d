#pragma once

#include <array>
#include <cstddef>

#include "fldplus/features/image.hpp"
#include "fldplus/nn/tensor.hpp"

namespace fldplus::features {

struct ChannelNormalization {
  std::array<float, 3> mean{0.485f, 0.456f, 0.406f};
  std::array<float, 3> stddev{0.229f, 0.224f, 0.225f};

  // Constants published with the ImageNet-pretrained torchvision backbones.
  static ChannelNormalization imagenet() { return {}; }
  static ChannelNormalization identity() { return {{0, 0, 0}, {1, 1, 1}}; }
};

// Resize (bilinear) -> /255 -> (v - mean[c]) / stddev[c]. Output is CHW.
nn::Tensor<float> preprocess(const Image& image, std::size_t height, std::size_t width,
                             const ChannelNormalization& norm);

}  // namespace fldplus::features
