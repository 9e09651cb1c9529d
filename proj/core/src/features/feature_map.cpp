#include "fldplus/features/feature_map.hpp"

#include <algorithm>
#include <string>

#include "fldplus/error.hpp"

namespace fldplus::features {

std::string_view to_string(PoolKind kind) noexcept {
  return kind == PoolKind::kMax ? "max" : "avg";
}

PoolKind parse_pool_kind(std::string_view name) {
  if (name == "avg" || name == "average") return PoolKind::kAverage;
  if (name == "max") return PoolKind::kMax;
  fail(ErrorCode::kInvalidArgument, "unknown pooling kind '" + std::string(name) + "'");
}

nn::Tensor<float> pool2d(const nn::Tensor<float>& t, PoolKind kind) {
  if (t.rank() != 3) fail(ErrorCode::kDimensionMismatch, "pool2d expects an H x W x C tensor");
  const std::size_t h = t.dim(0);
  const std::size_t w = t.dim(1);
  const std::size_t c = t.dim(2);
  if (h % 2 != 0 || w % 2 != 0) {
    fail(ErrorCode::kDimensionMismatch,
         "pool2d needs even spatial dims, got " + nn::shape_string(t));
  }
  nn::Tensor<float> out({h / 2, w / 2, c});
  for (std::size_t y = 0; y < h / 2; ++y) {
    for (std::size_t x = 0; x < w / 2; ++x) {
      const float* a = &t[((2 * y) * w + 2 * x) * c];
      const float* b = a + c;
      const float* d = a + w * c;
      const float* e = d + c;
      float* o = &out[(y * (w / 2) + x) * c];
      for (std::size_t k = 0; k < c; ++k) {
        o[k] = kind == PoolKind::kMax ? std::max({a[k], b[k], d[k], e[k]})
                                      : ((a[k] + b[k]) + (d[k] + e[k])) * 0.25f;
      }
    }
  }
  return out;
}

std::vector<float> flatten(const nn::Tensor<float>& hwc) { return hwc.storage(); }

nn::Tensor<float> unflatten(const std::vector<float>& v, std::size_t h, std::size_t w,
                            std::size_t c) {
  return nn::Tensor<float>({h, w, c}, v);
}

nn::Tensor<float> chw_to_hwc(const nn::Tensor<float>& chw) {
  if (chw.rank() != 3) fail(ErrorCode::kDimensionMismatch, "expected a C x H x W tensor");
  const std::size_t c = chw.dim(0);
  const std::size_t h = chw.dim(1);
  const std::size_t w = chw.dim(2);
  nn::Tensor<float> out({h, w, c});
  for (std::size_t k = 0; k < c; ++k) {
    for (std::size_t i = 0; i < h * w; ++i) out[i * c + k] = chw[k * h * w + i];
  }
  return out;
}

}  // namespace fldplus::features
