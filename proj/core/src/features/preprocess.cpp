#include "fldplus/features/preprocess.hpp"

#include "fldplus/error.hpp"

namespace fldplus::features {

nn::Tensor<float> preprocess(const Image& image, std::size_t height, std::size_t width,
                             const ChannelNormalization& norm) {
  if (image.channels != 3) {
    fail(ErrorCode::kDecode,
         "expected a 3-channel image, got " + std::to_string(image.channels) + " channels");
  }
  const Image sized = resize_bilinear(image, height, width);
  nn::Tensor<float> out({3, height, width});
  const std::size_t plane = height * width;
  for (std::size_t c = 0; c < 3; ++c) {
    const float inv_std = 1.0f / norm.stddev[c];
    for (std::size_t i = 0; i < plane; ++i) {
      out[c * plane + i] = (sized.data[i * 3 + c] / 255.0f - norm.mean[c]) * inv_std;
    }
  }
  return out;
}

}  // namespace fldplus::features
