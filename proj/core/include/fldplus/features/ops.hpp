#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "fldplus/nn/tensor.hpp"

// Inference kernels on single C x H x W float tensors.
namespace fldplus::features::ops {

using Map = nn::Tensor<float>;

struct Conv2d {
  Map weight;                 // [C_out, C_in / groups, kh, kw]
  std::vector<float> bias;    // empty or C_out
  std::array<std::size_t, 2> stride{1, 1};
  std::array<std::size_t, 2> padding{0, 0};
  std::array<std::size_t, 2> dilation{1, 1};
  std::size_t groups = 1;
};

Map conv2d(const Map& x, const Conv2d& conv);

// y = x * scale[c] + shift[c]  (batch norm with running statistics folded in)
Map channel_affine(const Map& x, const std::vector<float>& scale, const std::vector<float>& shift);

void relu(Map& x);
void relu6(Map& x);
void hardswish(Map& x);
void hardsigmoid(Map& x);
void sigmoid(Map& x);

// Elementwise; b may also be C x 1 x 1 and is then broadcast over H x W.
Map add(const Map& a, const Map& b);
Map mul(const Map& a, const Map& b);

Map max_pool2d(const Map& x, std::array<std::size_t, 2> kernel, std::array<std::size_t, 2> stride,
               std::array<std::size_t, 2> padding);
// Zero padding counts toward the divisor (count_include_pad).
Map avg_pool2d(const Map& x, std::array<std::size_t, 2> kernel, std::array<std::size_t, 2> stride,
               std::array<std::size_t, 2> padding);
Map global_avg_pool(const Map& x);

}  // namespace fldplus::features::ops
