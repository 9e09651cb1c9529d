#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace fldplus::features {

// Interleaved HWC pixels. Decoded files hold integers in [0, 255]; in-memory
// distortions keep full float precision until an image is written out.
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 3;
  std::vector<float> data;

  Image() = default;
  Image(std::size_t h, std::size_t w, std::size_t c, float fill = 0.0f)
      : height(h), width(w), channels(c), data(h * w * c, fill) {}

  float& at(std::size_t y, std::size_t x, std::size_t c) {
    return data[(y * width + x) * channels + c];
  }
  float at(std::size_t y, std::size_t x, std::size_t c) const {
    return data[(y * width + x) * channels + c];
  }
  std::size_t pixel_count() const noexcept { return height * width; }
};

// PNG or JPEG, sniffed from the leading bytes. Only 3-channel RGB is accepted.
Image decode_image(std::string_view bytes, const std::string& name = "<memory>");
Image read_image(const std::filesystem::path& path);

// 8-bit RGB PNG; values are rounded and clamped to [0, 255].
std::string encode_png(const Image& image);
void write_png(const std::filesystem::path& path, const Image& image);

// Lossy; used only by tests and fixtures.
std::string encode_jpeg(const Image& image, int quality = 95);

// Regular files with a .png/.jpg/.jpeg extension (any case), sorted by file name.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

// Bilinear resampling with half-pixel centres and edge clamping, no
// antialiasing (matches the common "align_corners = false" convention).
Image resize_bilinear(const Image& image, std::size_t out_height, std::size_t out_width);

}  // namespace fldplus::features
