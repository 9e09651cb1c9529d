#include "fldplus/experiments/procedural.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "fldplus/error.hpp"
#include "fldplus/hash.hpp"
#include "fldplus/parallel.hpp"

namespace fldplus::experiments {

namespace {

using Colour = std::array<double, 3>;

Colour random_colour(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(20.0, 235.0);
  return {u(rng), u(rng), u(rng)};
}

double smoothstep(double e0, double e1, double x) {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3 - 2 * t);
}

}  // namespace

features::Image procedural_image(std::size_t size, std::uint64_t seed) {
  if (size == 0) fail(ErrorCode::kInvalidArgument, "image size must be positive");
  std::mt19937_64 rng(derive_seed(seed, "procedural"));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> grain(0.0, 3.0);
  const double n = static_cast<double>(size);

  const Colour bg0 = random_colour(rng);
  const Colour bg1 = random_colour(rng);
  const double angle = u01(rng) * 2 * std::numbers::pi;
  const double gx = std::cos(angle), gy = std::sin(angle);
  const double fx = 1 + 3 * u01(rng), fy = 1 + 3 * u01(rng), phase = u01(rng) * 6.283;
  const double texture = 8 + 14 * u01(rng);

  std::vector<double> img(size * size * 3);
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const double px = (static_cast<double>(x) + 0.5) / n, py = (static_cast<double>(y) + 0.5) / n;
      const double t = std::clamp(0.5 + (px - 0.5) * gx + (py - 0.5) * gy, 0.0, 1.0);
      const double wave = texture * std::sin(2 * std::numbers::pi * (fx * px + fy * py) + phase);
      for (std::size_t c = 0; c < 3; ++c) {
        img[(y * size + x) * 3 + c] = (1 - t) * bg0[c] + t * bg1[c] + wave;
      }
    }
  }

  const int shapes = 3 + static_cast<int>(u01(rng) * 4);
  for (int s = 0; s < shapes; ++s) {
    const Colour col = random_colour(rng);
    const double cx = u01(rng), cy = u01(rng);
    const double rx = 0.08 + 0.25 * u01(rng), ry = 0.08 + 0.25 * u01(rng);
    const double rot = u01(rng) * std::numbers::pi;
    const double cr = std::cos(rot), sr = std::sin(rot);
    const bool bar = u01(rng) < 0.3;
    const double shade = 0.4 * (u01(rng) - 0.5);
    const double edge = 1.5 / n;
    for (std::size_t y = 0; y < size; ++y) {
      for (std::size_t x = 0; x < size; ++x) {
        const double px = (static_cast<double>(x) + 0.5) / n - cx;
        const double py = (static_cast<double>(y) + 0.5) / n - cy;
        const double a = (px * cr + py * sr) / rx, b = (-px * sr + py * cr) / ry;
        const double dist = bar ? std::max(std::abs(a), std::abs(b)) : std::sqrt(a * a + b * b);
        const double cover = 1.0 - smoothstep(1.0 - edge / std::min(rx, ry), 1.0 + edge / std::min(rx, ry), dist);
        if (cover <= 0) continue;
        const double light = 1.0 + shade * a;
        for (std::size_t c = 0; c < 3; ++c) {
          double& v = img[(y * size + x) * 3 + c];
          v = (1 - cover) * v + cover * col[c] * light;
        }
      }
    }
  }

  features::Image out(size, size, 3);
  for (std::size_t i = 0; i < img.size(); ++i) {
    out.data[i] = static_cast<float>(std::clamp(std::nearbyint(img[i] + grain(rng)), 0.0, 255.0));
  }
  return out;
}

features::Image dead_leaves_image(std::size_t size, std::uint64_t seed) {
  require(size >= 8, ErrorCode::kInvalidArgument, "dead-leaves images need size >= 8");
  std::mt19937_64 rng(derive_seed(seed, "leaves"));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_real_distribution<double> channel(10.0, 245.0);
  std::normal_distribution<double> grain(0.0, 2.0);
  const double rmin = 1.0;
  const double rmax = static_cast<double>(size) * 0.625;
  const int n = static_cast<int>(size);

  std::vector<double> img(size * size * 3, 128.0);
  std::vector<char> covered(size * size, 0);
  std::size_t left = size * size;
  // 1/r is uniform between 1/rmax and 1/rmin
  for (std::size_t k = 0; k < 64 * size && left > 0; ++k) {
    const double r = 1.0 / (1.0 / rmin - u01(rng) * (1.0 / rmin - 1.0 / rmax));
    const double cx = u01(rng) * n;
    const double cy = u01(rng) * n;
    const Colour c{channel(rng), channel(rng), channel(rng)};
    const int x0 = std::max(0, static_cast<int>(cx - r - 1));
    const int x1 = std::min(n - 1, static_cast<int>(cx + r + 1));
    const int y0 = std::max(0, static_cast<int>(cy - r - 1));
    const int y1 = std::min(n - 1, static_cast<int>(cy + r + 1));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * size + static_cast<std::size_t>(x);
        if (covered[p]) continue;
        const double dx = x + 0.5 - cx;
        const double dy = y + 0.5 - cy;
        if (dx * dx + dy * dy > r * r) continue;
        covered[p] = 1;
        --left;
        for (std::size_t ch = 0; ch < 3; ++ch) img[p * 3 + ch] = c[ch];
      }
    }
  }
  features::Image out(size, size, 3);
  for (std::size_t i = 0; i < img.size(); ++i) {
    out.data[i] = static_cast<float>(std::clamp(std::nearbyint(img[i] + grain(rng)), 0.0, 255.0));
  }
  return out;
}

std::string_view to_string(CorpusKind kind) noexcept {
  return kind == CorpusKind::kProcedural ? "procedural" : "dead-leaves";
}

CorpusKind parse_corpus_kind(std::string_view name) {
  if (name == "procedural") return CorpusKind::kProcedural;
  if (name == "dead-leaves" || name == "dead_leaves") return CorpusKind::kDeadLeaves;
  fail(ErrorCode::kInvalidArgument, fmt::format("unknown corpus kind '{}'", name));
}

features::Image corpus_image(CorpusKind kind, std::size_t size, std::uint64_t seed) {
  return kind == CorpusKind::kProcedural ? procedural_image(size, seed) : dead_leaves_image(size, seed);
}

std::vector<std::filesystem::path> write_corpus(const std::filesystem::path& dir, CorpusKind kind,
                                                std::size_t count, std::size_t size,
                                                std::uint64_t seed, std::size_t workers) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> paths(count);
  parallel_for(count, workers, [&](std::size_t i) {
    paths[i] = dir / fmt::format("img_{:05d}.png", i);
    features::write_png(paths[i], corpus_image(kind, size, derive_seed(seed, fmt::format("image/{}", i))));
  });
  return paths;
}

std::vector<features::Image> make_corpus(CorpusKind kind, std::size_t first, std::size_t count,
                                         std::size_t size, std::uint64_t seed, std::size_t workers) {
  std::vector<features::Image> out(count);
  parallel_for(count, workers, [&](std::size_t i) {
    out[i] = corpus_image(kind, size, derive_seed(seed, fmt::format("image/{}", first + i)));
  });
  return out;
}

}  // namespace fldplus::experiments
