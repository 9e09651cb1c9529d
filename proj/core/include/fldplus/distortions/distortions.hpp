#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fldplus/features/image.hpp"

namespace fldplus::distortions {

using features::Image;

enum class Kind { kGaussianNoise, kGaussianBlur, kSaltPepper };

std::string_view to_string(Kind kind) noexcept;  // "gaussian-noise", ...
Kind parse_kind(std::string_view name);          // also accepts underscores

// Throws kInvalidArgument unless alpha/p is in [0, 1] or k is odd and >= 1.
void validate_level(Kind kind, double level);

// (1 - alpha) * X + alpha * N, N a seeded standard-normal matrix min-max scaled
// to [0, 255] per image; result clipped to [0, 255].
Image gaussian_noise(const Image& image, double alpha, std::uint64_t seed);

// sigma = 0.3 * ((k - 1) / 2 - 1) + 0.8
double blur_sigma(int k);
std::vector<double> gaussian_kernel(int k);  // normalized, length k

// Separable Gaussian convolution, reflect-101 borders (dcb|abcd|cba).
Image gaussian_blur(const Image& image, int k);

// One uniform draw u per pixel: u < p/2 -> 255, u >= 1 - p/2 -> 0, all channels.
Image salt_pepper(const Image& image, double p, std::uint64_t seed);

Image apply(Kind kind, const Image& image, double level, std::uint64_t seed);

// Per-item stream so output never depends on processing order.
std::uint64_t image_seed(std::uint64_t seed, std::string_view name);

struct SweepOptions {
  Kind kind = Kind::kGaussianNoise;
  std::vector<double> levels;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

struct SweepEntry {
  std::size_t level_index = 0;
  std::string input;   // file name
  std::string output;  // path relative to the output directory
  bool ok = false;
  std::string sha256;  // of the written PNG
  std::string error;
};

struct SweepResult {
  std::vector<std::string> level_dirs;  // one per level, relative
  std::vector<SweepEntry> entries;      // level-major, files sorted
  std::string manifest_json;
  std::size_t failures() const;
};

// Writes <out>/<level dir>/<stem>.png for every input image and level plus
// <out>/manifest.json. Per-file failures are recorded and the sweep continues.
SweepResult distort_sweep(const std::filesystem::path& images_dir,
                          const std::filesystem::path& out_dir, const SweepOptions& options);

std::string level_dir_name(Kind kind, double level);

}  // namespace fldplus::distortions
