#include "fldplus/features/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fldplus/error.hpp"

namespace fldplus::features::ops {

namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::size_t out_extent(std::size_t in, std::size_t k, std::size_t s, std::size_t p,
                       std::size_t d) {
  const std::size_t span = d * (k - 1) + 1;
  if (in + 2 * p < span) fail(ErrorCode::kDimensionMismatch, "kernel larger than padded input");
  return (in + 2 * p - span) / s + 1;
}

void require_chw(const Map& x, const char* op) {
  if (x.rank() != 3) fail(ErrorCode::kDimensionMismatch, std::string(op) + " expects C x H x W");
}

template <typename F>
void for_each(Map& x, F f) {
  for (auto& v : x.storage()) v = f(v);
}

template <typename F>
Map binary(const Map& a, const Map& b, F f, const char* op) {
  require_chw(a, op);
  require_chw(b, op);
  Map out = a;
  if (a.dims() == b.dims()) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a[i], b[i]);
    return out;
  }
  if (b.rank() == 3 && b.dim(0) == a.dim(0) && b.dim(1) == 1 && b.dim(2) == 1) {
    const std::size_t plane = a.dim(1) * a.dim(2);
    for (std::size_t c = 0; c < a.dim(0); ++c) {
      for (std::size_t i = 0; i < plane; ++i) out[c * plane + i] = f(a[c * plane + i], b[c]);
    }
    return out;
  }
  if (a.dim(0) == b.dim(0) && a.dim(1) == 1 && a.dim(2) == 1) {
    out = b;
    const std::size_t plane = b.dim(1) * b.dim(2);
    for (std::size_t c = 0; c < b.dim(0); ++c) {
      for (std::size_t i = 0; i < plane; ++i) out[c * plane + i] = f(a[c], b[c * plane + i]);
    }
    return out;
  }
  fail(ErrorCode::kDimensionMismatch, std::string(op) + ": shapes " + nn::shape_string(a) +
                                          " and " + nn::shape_string(b) + " do not broadcast");
}

}  // namespace

Map conv2d(const Map& x, const Conv2d& conv) {
  require_chw(x, "conv2d");
  const auto& w = conv.weight;
  if (w.rank() != 4) fail(ErrorCode::kDimensionMismatch, "conv2d weight must be rank 4");
  const std::size_t cin = x.dim(0), h = x.dim(1), wd = x.dim(2);
  const std::size_t cout = w.dim(0), cin_g = w.dim(1), kh = w.dim(2), kw = w.dim(3);
  const std::size_t g = conv.groups;
  if (g == 0 || cin != cin_g * g || cout % g != 0) {
    fail(ErrorCode::kDimensionMismatch, "conv2d: input has " + std::to_string(cin) +
                                            " channels, weight " + nn::shape_string(w) +
                                            ", groups " + std::to_string(g));
  }
  if (!conv.bias.empty() && conv.bias.size() != cout) {
    fail(ErrorCode::kDimensionMismatch, "conv2d bias size mismatch");
  }
  const auto [sh, sw] = conv.stride;
  const auto [ph, pw] = conv.padding;
  const auto [dh, dw] = conv.dilation;
  const std::size_t oh = out_extent(h, kh, sh, ph, dh);
  const std::size_t ow = out_extent(wd, kw, sw, pw, dw);
  const std::size_t cout_g = cout / g;
  Map out({cout, oh, ow});

  auto sample = [&](std::size_t c, std::size_t oy, std::size_t ox, std::size_t ky,
                    std::size_t kx) -> float {
    const auto iy = static_cast<std::ptrdiff_t>(oy * sh + ky * dh) - static_cast<std::ptrdiff_t>(ph);
    const auto ix = static_cast<std::ptrdiff_t>(ox * sw + kx * dw) - static_cast<std::ptrdiff_t>(pw);
    if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(h) ||
        ix >= static_cast<std::ptrdiff_t>(wd)) {
      return 0.0f;
    }
    return x[(c * h + static_cast<std::size_t>(iy)) * wd + static_cast<std::size_t>(ix)];
  };

  if (cin_g == 1 && cout_g == 1) {
    // depthwise: direct loop
    for (std::size_t c = 0; c < cout; ++c) {
      const float b = conv.bias.empty() ? 0.0f : conv.bias[c];
      for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
          float acc = 0.0f;
          for (std::size_t ky = 0; ky < kh; ++ky) {
            for (std::size_t kx = 0; kx < kw; ++kx) {
              acc += w[(c * kh + ky) * kw + kx] * sample(c, oy, ox, ky, kx);
            }
          }
          out[(c * oh + oy) * ow + ox] = acc + b;
        }
      }
    }
    return out;
  }

  const std::size_t patch = cin_g * kh * kw;
  const std::size_t pixels = oh * ow;
  RowMatrix cols(patch, pixels);
  for (std::size_t grp = 0; grp < g; ++grp) {
    for (std::size_t ci = 0; ci < cin_g; ++ci) {
      const std::size_t c = grp * cin_g + ci;
      for (std::size_t ky = 0; ky < kh; ++ky) {
        for (std::size_t kx = 0; kx < kw; ++kx) {
          float* row = cols.data() + ((ci * kh + ky) * kw + kx) * pixels;
          for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) row[oy * ow + ox] = sample(c, oy, ox, ky, kx);
          }
        }
      }
    }
    Eigen::Map<const RowMatrix> wm(w.data() + grp * cout_g * patch, cout_g, patch);
    Eigen::Map<RowMatrix> om(out.data() + grp * cout_g * pixels, cout_g, pixels);
    om.noalias() = wm * cols;
    if (!conv.bias.empty()) {
      for (std::size_t o = 0; o < cout_g; ++o) om.row(o).array() += conv.bias[grp * cout_g + o];
    }
  }
  return out;
}

Map channel_affine(const Map& x, const std::vector<float>& scale, const std::vector<float>& shift) {
  require_chw(x, "batch_norm");
  const std::size_t c = x.dim(0);
  if (scale.size() != c || shift.size() != c) {
    fail(ErrorCode::kDimensionMismatch, "batch_norm parameter size mismatch");
  }
  Map out = x;
  const std::size_t plane = x.dim(1) * x.dim(2);
  for (std::size_t k = 0; k < c; ++k) {
    for (std::size_t i = 0; i < plane; ++i) out[k * plane + i] = x[k * plane + i] * scale[k] + shift[k];
  }
  return out;
}

void relu(Map& x) {
  for_each(x, [](float v) { return v > 0.0f ? v : 0.0f; });
}
void relu6(Map& x) {
  for_each(x, [](float v) { return std::clamp(v, 0.0f, 6.0f); });
}
void hardsigmoid(Map& x) {
  for_each(x, [](float v) { return std::clamp(v / 6.0f + 0.5f, 0.0f, 1.0f); });
}
void hardswish(Map& x) {
  for_each(x, [](float v) { return v * std::clamp(v + 3.0f, 0.0f, 6.0f) / 6.0f; });
}
void sigmoid(Map& x) {
  for_each(x, [](float v) { return 1.0f / (1.0f + std::exp(-v)); });
}

Map add(const Map& a, const Map& b) {
  return binary(a, b, [](float p, float q) { return p + q; }, "add");
}
Map mul(const Map& a, const Map& b) {
  return binary(a, b, [](float p, float q) { return p * q; }, "mul");
}

Map max_pool2d(const Map& x, std::array<std::size_t, 2> k, std::array<std::size_t, 2> s,
               std::array<std::size_t, 2> p) {
  require_chw(x, "max_pool2d");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t oh = out_extent(h, k[0], s[0], p[0], 1);
  const std::size_t ow = out_extent(w, k[1], s[1], p[1], 1);
  Map out({c, oh, ow});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        float m = -std::numeric_limits<float>::infinity();
        for (std::size_t ky = 0; ky < k[0]; ++ky) {
          for (std::size_t kx = 0; kx < k[1]; ++kx) {
            const auto iy = static_cast<std::ptrdiff_t>(oy * s[0] + ky) - static_cast<std::ptrdiff_t>(p[0]);
            const auto ix = static_cast<std::ptrdiff_t>(ox * s[1] + kx) - static_cast<std::ptrdiff_t>(p[1]);
            if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(h) ||
                ix >= static_cast<std::ptrdiff_t>(w)) {
              continue;
            }
            m = std::max(m, x[(ch * h + static_cast<std::size_t>(iy)) * w + static_cast<std::size_t>(ix)]);
          }
        }
        out[(ch * oh + oy) * ow + ox] = m;
      }
    }
  }
  return out;
}

Map avg_pool2d(const Map& x, std::array<std::size_t, 2> k, std::array<std::size_t, 2> s,
               std::array<std::size_t, 2> p) {
  require_chw(x, "avg_pool2d");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t oh = out_extent(h, k[0], s[0], p[0], 1);
  const std::size_t ow = out_extent(w, k[1], s[1], p[1], 1);
  const float inv = 1.0f / static_cast<float>(k[0] * k[1]);
  Map out({c, oh, ow});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        float acc = 0.0f;
        for (std::size_t ky = 0; ky < k[0]; ++ky) {
          for (std::size_t kx = 0; kx < k[1]; ++kx) {
            const auto iy = static_cast<std::ptrdiff_t>(oy * s[0] + ky) - static_cast<std::ptrdiff_t>(p[0]);
            const auto ix = static_cast<std::ptrdiff_t>(ox * s[1] + kx) - static_cast<std::ptrdiff_t>(p[1]);
            if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(h) ||
                ix >= static_cast<std::ptrdiff_t>(w)) {
              continue;
            }
            acc += x[(ch * h + static_cast<std::size_t>(iy)) * w + static_cast<std::size_t>(ix)];
          }
        }
        out[(ch * oh + oy) * ow + ox] = acc * inv;
      }
    }
  }
  return out;
}

Map global_avg_pool(const Map& x) {
  require_chw(x, "global_avg_pool");
  const std::size_t c = x.dim(0);
  const std::size_t plane = x.dim(1) * x.dim(2);
  Map out({c, 1, 1});
  for (std::size_t ch = 0; ch < c; ++ch) {
    double acc = 0;
    for (std::size_t i = 0; i < plane; ++i) acc += x[ch * plane + i];
    out[ch] = static_cast<float>(acc / static_cast<double>(plane));
  }
  return out;
}

}  // namespace fldplus::features::ops
