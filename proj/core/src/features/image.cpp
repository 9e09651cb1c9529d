#include "fldplus/features/image.hpp"

#include <jpeglib.h>
#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>

#include "fldplus/binary_io.hpp"
#include "fldplus/error.hpp"

namespace fldplus::features {

namespace {

bool is_png(std::string_view b) {
  return b.size() >= 8 && std::memcmp(b.data(), "\x89PNG\r\n\x1a\n", 8) == 0;
}

bool is_jpeg(std::string_view b) {
  return b.size() >= 3 && static_cast<unsigned char>(b[0]) == 0xFF &&
         static_cast<unsigned char>(b[1]) == 0xD8 && static_cast<unsigned char>(b[2]) == 0xFF;
}

Image decode_png(std::string_view bytes, const std::string& name) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    fail(ErrorCode::kDecode, name + ": " + img.message);
  }
  const auto channels = PNG_IMAGE_SAMPLE_CHANNELS(img.format);
  if (channels != 3) {
    png_image_free(&img);
    fail(ErrorCode::kDecode, name + ": expected 3 colour channels, found " +
                                 std::to_string(channels));
  }
  img.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    fail(ErrorCode::kDecode, name + ": " + img.message);
  }
  Image out(img.height, img.width, 3);
  std::copy(buf.begin(), buf.end(), out.data.begin());
  return out;
}

struct JpegError {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegError*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

void jpeg_silence(j_common_ptr, int) {}

// libjpeg reports errors through longjmp, so nothing with a destructor may be
// live between setjmp and the decode calls; the pixel buffer is preallocated.
Image decode_jpeg(std::string_view bytes, const std::string& name) {
  jpeg_decompress_struct cinfo;
  JpegError err;
  cinfo.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = jpeg_error_exit;
  err.mgr.emit_message = jpeg_silence;
  Image out;
  std::vector<unsigned char> row;
  bool header_ok = false;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    fail(ErrorCode::kDecode, name + ": " + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, reinterpret_cast<const unsigned char*>(bytes.data()),
               static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  header_ok = cinfo.num_components == 3;
  if (!header_ok) {
    const int comps = cinfo.num_components;
    jpeg_destroy_decompress(&cinfo);
    fail(ErrorCode::kDecode,
         name + ": expected 3 colour channels, found " + std::to_string(comps));
  }
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  out = Image(cinfo.output_height, cinfo.output_width, 3);
  row.resize(static_cast<std::size_t>(cinfo.output_width) * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    unsigned char* rows[] = {row.data()};
    const std::size_t y = cinfo.output_scanline;
    jpeg_read_scanlines(&cinfo, rows, 1);
    std::copy(row.begin(), row.end(), out.data.begin() + static_cast<std::ptrdiff_t>(y * row.size()));
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return out;
}

std::vector<unsigned char> to_bytes(const Image& image) {
  if (image.channels != 3) fail(ErrorCode::kInvalidArgument, "only RGB images can be encoded");
  std::vector<unsigned char> px(image.data.size());
  for (std::size_t i = 0; i < px.size(); ++i) {
    px[i] = static_cast<unsigned char>(std::clamp(std::nearbyint(image.data[i]), 0.0f, 255.0f));
  }
  return px;
}

}  // namespace

Image decode_image(std::string_view bytes, const std::string& name) {
  if (is_png(bytes)) return decode_png(bytes, name);
  if (is_jpeg(bytes)) return decode_jpeg(bytes, name);
  fail(ErrorCode::kDecode, name + ": not a PNG or JPEG file");
}

Image read_image(const std::filesystem::path& path) {
  return decode_image(io::read_file(path), path.string());
}

std::string encode_png(const Image& image) {
  const auto px = to_bytes(image);
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, px.data(), 0, nullptr)) {
    fail(ErrorCode::kIo, std::string("png encode failed: ") + img.message);
  }
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, px.data(), 0, nullptr)) {
    fail(ErrorCode::kIo, std::string("png encode failed: ") + img.message);
  }
  out.resize(size);
  return out;
}

void write_png(const std::filesystem::path& path, const Image& image) {
  io::write_file(path, encode_png(image));
}

std::string encode_jpeg(const Image& image, int quality) {
  const auto px = to_bytes(image);
  jpeg_compress_struct cinfo;
  jpeg_error_mgr jerr;
  cinfo.err = jpeg_std_error(&jerr);
  jpeg_create_compress(&cinfo);
  unsigned char* buffer = nullptr;
  unsigned long size = 0;
  jpeg_mem_dest(&cinfo, &buffer, &size);
  cinfo.image_width = static_cast<JDIMENSION>(image.width);
  cinfo.image_height = static_cast<JDIMENSION>(image.height);
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  while (cinfo.next_scanline < cinfo.image_height) {
    auto* row = const_cast<unsigned char*>(px.data() + cinfo.next_scanline * image.width * 3);
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  std::string out(reinterpret_cast<char*>(buffer), size);
  jpeg_destroy_compress(&cinfo);
  std::free(buffer);
  return out;
}

std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    fail(ErrorCode::kIo, "not a directory: " + dir.string());
  }
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.filename().string() < b.filename().string();
  });
  return out;
}

Image resize_bilinear(const Image& image, std::size_t out_h, std::size_t out_w) {
  if (out_h == 0 || out_w == 0) fail(ErrorCode::kInvalidArgument, "resize target must be positive");
  if (image.height == out_h && image.width == out_w) return image;
  struct Tap {
    std::size_t lo, hi;
    float frac;
  };
  auto taps = [](std::size_t in, std::size_t out) {
    std::vector<Tap> t(out);
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    for (std::size_t i = 0; i < out; ++i) {
      double src = (static_cast<double>(i) + 0.5) * scale - 0.5;
      src = std::max(src, 0.0);
      auto lo = static_cast<std::size_t>(src);
      lo = std::min(lo, in - 1);
      const std::size_t hi = std::min(lo + 1, in - 1);
      t[i] = {lo, hi, static_cast<float>(src - static_cast<double>(lo))};
    }
    return t;
  };
  const auto ty = taps(image.height, out_h);
  const auto tx = taps(image.width, out_w);
  Image out(out_h, out_w, image.channels);
  for (std::size_t y = 0; y < out_h; ++y) {
    for (std::size_t x = 0; x < out_w; ++x) {
      for (std::size_t c = 0; c < image.channels; ++c) {
        const float top = image.at(ty[y].lo, tx[x].lo, c) * (1 - tx[x].frac) +
                          image.at(ty[y].lo, tx[x].hi, c) * tx[x].frac;
        const float bottom = image.at(ty[y].hi, tx[x].lo, c) * (1 - tx[x].frac) +
                             image.at(ty[y].hi, tx[x].hi, c) * tx[x].frac;
        out.at(y, x, c) = top * (1 - ty[y].frac) + bottom * ty[y].frac;
      }
    }
  }
  return out;
}

}  // namespace fldplus::features
