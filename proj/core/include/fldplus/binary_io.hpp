#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fldplus::io {

// Little-endian byte sink shared by every on-disk container in the project.
class ByteWriter {
 public:
  void u8(std::uint8_t v);
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f32(float v);
  void f64(double v);
  void bytes(std::string_view raw);

  const std::string& buffer() const noexcept { return buffer_; }
  void write_file(const std::filesystem::path& path) const;

 private:
  std::string buffer_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string data) : data_(std::move(data)) {}
  static ByteReader from_file(const std::filesystem::path& path);

  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  float f32();
  double f64();
  std::string bytes(std::size_t n);

  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  std::size_t position() const noexcept { return pos_; }
  bool at_end() const noexcept { return pos_ == data_.size(); }

  // Throws ErrorCode::kTruncated when fewer than n bytes remain.
  void require(std::size_t n, std::string_view what) const;

 private:
  std::string data_;
  std::size_t pos_ = 0;
};

enum class Precision : std::uint8_t { kFloat32 = 0, kFloat64 = 1 };

std::string_view to_string(Precision p) noexcept;
std::size_t element_size(Precision p) noexcept;
Precision precision_from_code(std::uint8_t code);

template <typename T>
constexpr Precision precision_of() noexcept {
  return sizeof(T) == 4 ? Precision::kFloat32 : Precision::kFloat64;
}

// Record layout: u16 name length, name bytes, u8 rank, u32 dims..., payload.
struct NamedTensor {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<double> values;
};

void write_named_tensor(ByteWriter& out, std::string_view name,
                        std::span<const std::uint32_t> dims,
                        std::span<const double> values, Precision precision);
void write_named_tensor(ByteWriter& out, std::string_view name,
                        std::span<const std::uint32_t> dims,
                        std::span<const float> values, Precision precision);
NamedTensor read_named_tensor(ByteReader& in, Precision precision);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace fldplus::io
