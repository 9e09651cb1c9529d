#include "fldplus/distortions/distortions.hpp"

#include <json.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fldplus/binary_io.hpp"
#include "fldplus/error.hpp"
#include "fldplus/hash.hpp"
#include "fldplus/parallel.hpp"
#include "fldplus/version.hpp"

namespace fldplus::distortions {

std::string_view to_string(Kind kind) noexcept {
  switch (kind) {
    case Kind::kGaussianNoise: return "gaussian-noise";
    case Kind::kGaussianBlur: return "gaussian-blur";
    case Kind::kSaltPepper: return "salt-pepper";
  }
  return "?";
}

Kind parse_kind(std::string_view name) {
  std::string n(name);
  std::replace(n.begin(), n.end(), '_', '-');
  if (n == "gaussian-noise" || n == "noise") return Kind::kGaussianNoise;
  if (n == "gaussian-blur" || n == "blur") return Kind::kGaussianBlur;
  if (n == "salt-pepper" || n == "salt-and-pepper") return Kind::kSaltPepper;
  fail(ErrorCode::kInvalidArgument, "unknown distortion '" + std::string(name) +
                                        "' (gaussian-noise, gaussian-blur, salt-pepper)");
}

void validate_level(Kind kind, double level) {
  if (!std::isfinite(level)) fail(ErrorCode::kInvalidArgument, "distortion level is not finite");
  if (kind == Kind::kGaussianBlur) {
    if (level < 1 || level != std::floor(level) || static_cast<long>(level) % 2 == 0) {
      fail(ErrorCode::kInvalidArgument,
           "blur kernel size must be an odd integer >= 1, got " + fmt::format("{}", level));
    }
    return;
  }
  if (level < 0 || level > 1) {
    fail(ErrorCode::kInvalidArgument, std::string(to_string(kind)) + " level must be in [0, 1], got " +
                                          fmt::format("{}", level));
  }
}

Image gaussian_noise(const Image& image, double alpha, std::uint64_t seed) {
  validate_level(Kind::kGaussianNoise, alpha);
  if (alpha == 0) return image;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> noise(image.data.size());
  for (auto& v : noise) v = normal(rng);
  const auto [lo, hi] = std::minmax_element(noise.begin(), noise.end());
  const double mn = noise.empty() ? 0 : *lo;
  const double range = noise.empty() ? 0 : *hi - mn;
  Image out = image;
  for (std::size_t i = 0; i < noise.size(); ++i) {
    const double n = range > 0 ? (noise[i] - mn) / range * 255.0 : 127.5;
    const double v = (1.0 - alpha) * image.data[i] + alpha * n;
    out.data[i] = static_cast<float>(std::clamp(v, 0.0, 255.0));
  }
  return out;
}

double blur_sigma(int k) { return 0.3 * ((k - 1) * 0.5 - 1.0) + 0.8; }

std::vector<double> gaussian_kernel(int k) {
  validate_level(Kind::kGaussianBlur, k);
  const double sigma = blur_sigma(k);
  const int r = k / 2;
  std::vector<double> w(static_cast<std::size_t>(k));
  double sum = 0;
  for (int i = 0; i < k; ++i) {
    const double x = i - r;
    w[static_cast<std::size_t>(i)] = std::exp(-x * x / (2 * sigma * sigma));
    sum += w[static_cast<std::size_t>(i)];
  }
  for (auto& v : w) v /= sum;
  return w;
}

namespace {

// reflect-101: -1 -> 1, n -> n - 2; folded repeatedly for kernels wider than the image
std::size_t reflect101(long i, long n) {
  if (n == 1) return 0;
  const long period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  if (i >= n) i = period - i;
  return static_cast<std::size_t>(i);
}

}  // namespace

Image gaussian_blur(const Image& image, int k) {
  const auto w = gaussian_kernel(k);
  if (k == 1) return image;
  const long r = k / 2;
  const long h = static_cast<long>(image.height), wd = static_cast<long>(image.width);
  const std::size_t ch = image.channels;
  std::vector<double> tmp(image.data.size());
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < wd; ++x) {
      for (std::size_t c = 0; c < ch; ++c) {
        double acc = 0;
        for (long t = -r; t <= r; ++t) {
          acc += w[static_cast<std::size_t>(t + r)] *
                 image.at(static_cast<std::size_t>(y), reflect101(x + t, wd), c);
        }
        tmp[(static_cast<std::size_t>(y * wd + x)) * ch + c] = acc;
      }
    }
  }
  Image out = image;
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < wd; ++x) {
      for (std::size_t c = 0; c < ch; ++c) {
        double acc = 0;
        for (long t = -r; t <= r; ++t) {
          acc += w[static_cast<std::size_t>(t + r)] *
                 tmp[(reflect101(y + t, h) * static_cast<std::size_t>(wd) + static_cast<std::size_t>(x)) * ch + c];
        }
        out.data[(static_cast<std::size_t>(y * wd + x)) * ch + c] =
            static_cast<float>(std::clamp(acc, 0.0, 255.0));
      }
    }
  }
  return out;
}

Image salt_pepper(const Image& image, double p, std::uint64_t seed) {
  validate_level(Kind::kSaltPepper, p);
  if (p == 0) return image;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Image out = image;
  for (std::size_t i = 0; i < image.pixel_count(); ++i) {
    const double u = uniform(rng);
    float value;
    if (u < p / 2) {
      value = 255.0f;
    } else if (u >= 1.0 - p / 2) {
      value = 0.0f;
    } else {
      continue;
    }
    for (std::size_t c = 0; c < image.channels; ++c) out.data[i * image.channels + c] = value;
  }
  return out;
}

Image apply(Kind kind, const Image& image, double level, std::uint64_t seed) {
  switch (kind) {
    case Kind::kGaussianNoise: return gaussian_noise(image, level, seed);
    case Kind::kGaussianBlur:
      validate_level(kind, level);
      return gaussian_blur(image, static_cast<int>(level));
    case Kind::kSaltPepper: return salt_pepper(image, level, seed);
  }
  fail(ErrorCode::kInvalidArgument, "unknown distortion kind");
}

std::uint64_t image_seed(std::uint64_t seed, std::string_view name) {
  return derive_seed(seed, name);
}

std::size_t SweepResult::failures() const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [](const SweepEntry& e) { return !e.ok; }));
}

std::string level_dir_name(Kind kind, double level) {
  return fmt::format("{}-{}", to_string(kind), level);
}

SweepResult distort_sweep(const std::filesystem::path& images_dir,
                          const std::filesystem::path& out_dir, const SweepOptions& options) {
  if (options.levels.empty()) fail(ErrorCode::kInvalidArgument, "no distortion levels given");
  for (double l : options.levels) validate_level(options.kind, l);
  const auto files = features::list_images(images_dir);
  if (files.empty()) fail(ErrorCode::kInsufficientData, "no PNG/JPEG files in " + images_dir.string());

  SweepResult result;
  for (double l : options.levels) {
    result.level_dirs.push_back(level_dir_name(options.kind, l));
    std::filesystem::create_directories(out_dir / result.level_dirs.back());
  }
  const std::size_t nf = files.size();
  result.entries.resize(options.levels.size() * nf);
  // one task per input file: decode once, write every level
  parallel_for(nf, options.workers, [&](std::size_t f) {
    const std::string name = files[f].filename().string();
    const std::string out_name = files[f].stem().string() + ".png";
    Image img;
    std::string load_error;
    try {
      img = features::read_image(files[f]);
    } catch (const Error& e) {
      load_error = e.what();
    }
    const auto seed = image_seed(options.seed, name);
    for (std::size_t li = 0; li < options.levels.size(); ++li) {
      SweepEntry& e = result.entries[li * nf + f];
      e.level_index = li;
      e.input = name;
      e.output = result.level_dirs[li] + "/" + out_name;
      if (!load_error.empty()) {
        e.error = load_error;
        continue;
      }
      try {
        const auto png = features::encode_png(apply(options.kind, img, options.levels[li], seed));
        io::write_file(out_dir / e.output, png);
        e.sha256 = sha256_hex(png);
        e.ok = true;
      } catch (const Error& err) {
        e.error = err.what();
      }
    }
  });

  nlohmann::ordered_json j;
  j["tool"] = std::string(kToolName);
  j["version"] = std::string(kToolVersion);
  j["kind"] = std::string(to_string(options.kind));
  j["levels"] = options.levels;
  j["seed"] = options.seed;
  j["noise_scaling"] = "minmax";
  j["blur_sigma"] = "0.3*((k-1)/2-1)+0.8";
  j["blur_border"] = "reflect101";
  j["salt_pepper_draw"] = "per-pixel";
  j["level_dirs"] = result.level_dirs;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& e : result.entries) {
    nlohmann::ordered_json o;
    o["level"] = options.levels[e.level_index];
    o["input"] = e.input;
    o["output"] = e.output;
    o["status"] = e.ok ? "ok" : "error";
    if (e.ok) {
      o["sha256"] = e.sha256;
    } else {
      o["error"] = e.error;
    }
    arr.push_back(std::move(o));
  }
  j["files"] = std::move(arr);
  j["failures"] = result.failures();
  result.manifest_json = j.dump(2) + "\n";
  io::write_file(out_dir / "manifest.json", result.manifest_json);
  return result;
}

}  // namespace fldplus::distortions
