#include "fldplus/binary_io.hpp"

#include <bit>
#include <fstream>
#include <iterator>
#include <sstream>

#include "fldplus/error.hpp"

namespace fldplus::io {

void ByteWriter::u8(std::uint8_t v) { buffer_.push_back(static_cast<char>(v)); }

void ByteWriter::u16(std::uint16_t v) {
  for (int i = 0; i < 2; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
void ByteWriter::bytes(std::string_view raw) { buffer_.append(raw); }

void ByteWriter::write_file(const std::filesystem::path& path) const {
  io::write_file(path, buffer_);
}

ByteReader ByteReader::from_file(const std::filesystem::path& path) {
  return ByteReader(read_file(path));
}

void ByteReader::require(std::size_t n, std::string_view what) const {
  if (remaining() < n) {
    std::ostringstream msg;
    msg << "truncated input while reading " << what << " (need " << n << " bytes, "
        << remaining() << " remain)";
    fail(ErrorCode::kTruncated, msg.str());
  }
}

std::uint8_t ByteReader::u8() {
  require(1, "u8");
  return static_cast<std::uint8_t>(data_[pos_++]);
}

std::uint16_t ByteReader::u16() {
  require(2, "u16");
  std::uint16_t v = 0;
  for (int i = 0; i < 2; ++i) v |= static_cast<std::uint16_t>(u8()) << (8 * i);
  return v;
}

std::uint32_t ByteReader::u32() {
  require(4, "u32");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
  return v;
}

std::uint64_t ByteReader::u64() {
  require(8, "u64");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
  return v;
}

float ByteReader::f32() { return std::bit_cast<float>(u32()); }
double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::string ByteReader::bytes(std::size_t n) {
  require(n, "byte string");
  std::string out = data_.substr(pos_, n);
  pos_ += n;
  return out;
}

std::string_view to_string(Precision p) noexcept {
  return p == Precision::kFloat32 ? "f32" : "f64";
}

std::size_t element_size(Precision p) noexcept { return p == Precision::kFloat32 ? 4 : 8; }

Precision precision_from_code(std::uint8_t code) {
  if (code > 1) fail(ErrorCode::kFormat, "unknown precision code " + std::to_string(code));
  return static_cast<Precision>(code);
}

namespace {

template <typename T>
void write_named_tensor_impl(ByteWriter& out, std::string_view name,
                             std::span<const std::uint32_t> dims, std::span<const T> values,
                             Precision precision) {
  if (name.size() > 0xFFFF) fail(ErrorCode::kInvalidArgument, "tensor name too long");
  if (dims.size() > 0xFF) fail(ErrorCode::kInvalidArgument, "tensor rank too large");
  std::size_t count = 1;
  for (auto d : dims) count *= d;
  if (count != values.size()) {
    fail(ErrorCode::kDimensionMismatch,
         "tensor '" + std::string(name) + "' dims disagree with payload size");
  }
  out.u16(static_cast<std::uint16_t>(name.size()));
  out.bytes(name);
  out.u8(static_cast<std::uint8_t>(dims.size()));
  for (auto d : dims) out.u32(d);
  for (T v : values) {
    if (precision == Precision::kFloat32) {
      out.f32(static_cast<float>(v));
    } else {
      out.f64(static_cast<double>(v));
    }
  }
}

}  // namespace

void write_named_tensor(ByteWriter& out, std::string_view name,
                        std::span<const std::uint32_t> dims, std::span<const double> values,
                        Precision precision) {
  write_named_tensor_impl(out, name, dims, values, precision);
}

void write_named_tensor(ByteWriter& out, std::string_view name,
                        std::span<const std::uint32_t> dims, std::span<const float> values,
                        Precision precision) {
  write_named_tensor_impl(out, name, dims, values, precision);
}

NamedTensor read_named_tensor(ByteReader& in, Precision precision) {
  NamedTensor t;
  const auto name_len = in.u16();
  t.name = in.bytes(name_len);
  const auto rank = in.u8();
  std::uint64_t count = 1;
  for (std::uint8_t i = 0; i < rank; ++i) {
    t.dims.push_back(in.u32());
    count *= t.dims.back();
    if (count > (std::uint64_t{1} << 40)) {
      fail(ErrorCode::kFormat, "tensor '" + t.name + "' has an implausible element count");
    }
  }
  in.require(static_cast<std::size_t>(count) * element_size(precision),
             "payload of tensor '" + t.name + "'");
  t.values.resize(static_cast<std::size_t>(count));
  for (auto& v : t.values) {
    v = precision == Precision::kFloat32 ? static_cast<double>(in.f32()) : in.f64();
  }
  return t;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open '" + path.string() + "' for reading");
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) fail(ErrorCode::kIo, "read failure on '" + path.string() + "'");
  return data;
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) fail(ErrorCode::kIo, "write failure on '" + path.string() + "'");
}

}  // namespace fldplus::io
