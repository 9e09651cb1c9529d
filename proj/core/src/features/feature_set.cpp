#include "fldplus/features/feature_set.hpp"

#include <json.hpp>

#include <limits>

#include "fldplus/error.hpp"
#include "fldplus/hash.hpp"

namespace fldplus::features {

using nlohmann::ordered_json;

namespace {
constexpr std::string_view kCacheMagic = "FCH1";
}

template <nn::Real T>
nn::Tensor<T> FeatureSet::as_tensor() const {
  if (count() == 0) fail(ErrorCode::kInsufficientData, "feature set is empty");
  return nn::Tensor<T>::from_rows(count(), dim, std::vector<T>(values.begin(), values.end()));
}

template nn::Tensor<float> FeatureSet::as_tensor<float>() const;
template nn::Tensor<double> FeatureSet::as_tensor<double>() const;

FeatureSet FeatureSet::subset(std::span<const std::size_t> rows) const {
  FeatureSet out;
  out.dim = dim;
  out.precision = precision;
  out.provenance = provenance;
  out.provenance.files.clear();
  out.provenance.file_sha256.clear();
  out.values.reserve(rows.size() * dim);
  const bool has_files = provenance.files.size() == count();
  const bool has_hashes = provenance.file_sha256.size() == count();
  for (auto r : rows) {
    if (r >= count()) fail(ErrorCode::kInvalidArgument, "subset row out of range");
    auto src = row(r);
    out.values.insert(out.values.end(), src.begin(), src.end());
    if (has_files) out.provenance.files.push_back(provenance.files[r]);
    if (has_hashes) out.provenance.file_sha256.push_back(provenance.file_sha256[r]);
  }
  if (has_files && has_hashes) {
    out.provenance.image_list_sha256 =
        hash_file_list(out.provenance.files, out.provenance.file_sha256);
  }
  return out;
}

std::string encode_cache(const FeatureSet& set) {
  const std::size_t count = set.count();
  if (count > std::numeric_limits<std::uint32_t>::max() ||
      set.dim > std::numeric_limits<std::uint32_t>::max()) {
    fail(ErrorCode::kInvalidArgument, "feature set too large for the cache format");
  }
  if (count * set.dim != set.values.size()) {
    fail(ErrorCode::kDimensionMismatch, "feature values are not a whole number of rows");
  }
  io::ByteWriter out;
  out.bytes(kCacheMagic);
  out.u16(kCacheVersion);
  out.u32(static_cast<std::uint32_t>(count));
  out.u32(static_cast<std::uint32_t>(set.dim));
  out.u8(static_cast<std::uint8_t>(set.precision));
  if (set.precision == io::Precision::kFloat32) {
    for (double v : set.values) out.f32(static_cast<float>(v));
  } else {
    for (double v : set.values) out.f64(v);
  }
  return out.buffer();
}

FeatureSet decode_cache(std::string bytes) {
  io::ByteReader in(std::move(bytes));
  in.require(kCacheMagic.size(), "cache magic");
  if (in.bytes(kCacheMagic.size()) != kCacheMagic) {
    fail(ErrorCode::kFormat, "not a feature cache (bad magic)");
  }
  const auto version = in.u16();
  if (version != kCacheVersion) {
    fail(ErrorCode::kVersion, "unsupported feature cache version " + std::to_string(version));
  }
  FeatureSet set;
  const std::uint64_t count = in.u32();
  set.dim = in.u32();
  set.precision = io::precision_from_code(in.u8());
  const std::uint64_t elements = count * static_cast<std::uint64_t>(set.dim);  // < 2^64
  const std::uint64_t esize = io::element_size(set.precision);
  if (elements > std::numeric_limits<std::uint64_t>::max() / esize) {
    fail(ErrorCode::kFormat, "feature cache count * dim overflows");
  }
  if (elements * esize > in.remaining()) {
    fail(ErrorCode::kTruncated, "feature cache payload truncated: expected " +
                                    std::to_string(elements * esize) + " bytes, found " +
                                    std::to_string(in.remaining()));
  }
  if (count > 0 && set.dim == 0) fail(ErrorCode::kFormat, "feature cache has rows of width 0");
  set.values.resize(static_cast<std::size_t>(elements));
  for (auto& v : set.values) {
    v = set.precision == io::Precision::kFloat32 ? static_cast<double>(in.f32()) : in.f64();
  }
  if (!in.at_end()) fail(ErrorCode::kFormat, "trailing bytes after feature cache payload");
  return set;
}

std::string hash_file_list(const std::vector<std::string>& names,
                           const std::vector<std::string>& hashes) {
  std::string joined;
  for (std::size_t i = 0; i < names.size(); ++i) {
    joined += names[i];
    joined += '\t';
    joined += i < hashes.size() ? hashes[i] : "";
    joined += '\n';
  }
  return sha256_hex(joined);
}

std::string provenance_json(const FeatureSet& set) {
  const auto& p = set.provenance;
  ordered_json j;
  j["count"] = set.count();
  j["dim"] = set.dim;
  j["dtype"] = std::string(io::to_string(set.precision));
  j["source"] = p.source;
  j["backbone"] = p.backbone;
  j["pooling"] = p.pooling;
  if (p.map_shape) {
    j["map_shape"] = {p.map_shape->height, p.map_shape->width, p.map_shape->channels};
  }
  j["image_list_sha256"] = p.image_list_sha256;
  j["files"] = p.files;
  j["file_sha256"] = p.file_sha256;
  return j.dump(2) + "\n";
}

void apply_provenance_json(const std::string& text, FeatureSet& set) {
  try {
    const auto j = ordered_json::parse(text);
    auto& p = set.provenance;
    p.source = j.value("source", "");
    p.backbone = j.value("backbone", "");
    p.pooling = j.value("pooling", "");
    if (j.contains("map_shape")) {
      const auto& s = j.at("map_shape");
      p.map_shape = MapShape{s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>(),
                             s.at(2).get<std::size_t>()};
    }
    p.image_list_sha256 = j.value("image_list_sha256", "");
    p.files = j.value("files", std::vector<std::string>{});
    p.file_sha256 = j.value("file_sha256", std::vector<std::string>{});
  } catch (const ordered_json::exception& e) {
    fail(ErrorCode::kFormat, std::string("malformed cache sidecar: ") + e.what());
  }
}

void write_cache(const std::filesystem::path& path, const FeatureSet& set) {
  io::write_file(path, encode_cache(set));
  io::write_file(path.string() + ".json", provenance_json(set));
}

FeatureSet read_cache(const std::filesystem::path& path) {
  FeatureSet set = decode_cache(io::read_file(path));
  const std::filesystem::path sidecar = path.string() + ".json";
  std::error_code ec;
  if (std::filesystem::exists(sidecar, ec)) apply_provenance_json(io::read_file(sidecar), set);
  return set;
}

}  // namespace fldplus::features
