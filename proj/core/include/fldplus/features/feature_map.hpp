#pragma once

#include <string_view>
#include <vector>

#include "fldplus/nn/tensor.hpp"

namespace fldplus::features {

enum class PoolKind { kAverage, kMax };

std::string_view to_string(PoolKind kind) noexcept;
PoolKind parse_pool_kind(std::string_view name);

// 2x2 window, stride 2, on an H x W x C map. H and W must be even.
nn::Tensor<float> pool2d(const nn::Tensor<float>& hwc, PoolKind kind);

// Row-major (h, w, c) order: index = (h * W + w) * C + c.
std::vector<float> flatten(const nn::Tensor<float>& hwc);
nn::Tensor<float> unflatten(const std::vector<float>& v, std::size_t h, std::size_t w,
                            std::size_t c);

// CHW activations to the HWC layout used for pooling and flattening.
nn::Tensor<float> chw_to_hwc(const nn::Tensor<float>& chw);

}  // namespace fldplus::features
