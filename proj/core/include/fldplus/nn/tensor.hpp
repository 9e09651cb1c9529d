#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fldplus/error.hpp"

namespace fldplus::nn {

// Training and inference run in float; double exists for verification.
template <typename T>
concept Real = std::same_as<T, float> || std::same_as<T, double>;

// Dense row-major tensor. Rank-2 tensors are used as (rows x cols) batches.
template <Real T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> dims, T fill = T{0})
      : dims_(std::move(dims)), data_(element_count(dims_), fill) {}

  Tensor(std::vector<std::size_t> dims, std::vector<T> data)
      : dims_(std::move(dims)), data_(std::move(data)) {
    if (element_count(dims_) != data_.size()) {
      fail(ErrorCode::kDimensionMismatch, "tensor dims do not match data length");
    }
  }

  static Tensor matrix(std::size_t rows, std::size_t cols, T fill = T{0}) {
    return Tensor({rows, cols}, fill);
  }

  static Tensor from_rows(std::size_t rows, std::size_t cols, std::vector<T> data) {
    return Tensor({rows, cols}, std::move(data));
  }

  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  std::size_t rank() const noexcept { return dims_.size(); }
  std::size_t dim(std::size_t axis) const { return dims_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  // Rank-1 tensors behave as a single row.
  std::size_t rows() const noexcept { return dims_.size() <= 1 ? 1 : dims_[0]; }
  std::size_t cols() const noexcept {
    if (dims_.empty()) return 0;
    return dims_.size() == 1 ? dims_[0] : data_.size() / dims_[0];
  }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  std::vector<T>& storage() noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }
  T& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols() + c]; }
  const T& operator()(std::size_t r, std::size_t c) const noexcept {
    return data_[r * cols() + c];
  }

  std::span<T> row(std::size_t r) noexcept { return {data_.data() + r * cols(), cols()}; }
  std::span<const T> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols(), cols()};
  }

  void reshape(std::vector<std::size_t> dims) {
    if (element_count(dims) != data_.size()) {
      fail(ErrorCode::kDimensionMismatch, "reshape changes element count");
    }
    dims_ = std::move(dims);
  }

  bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
  }

  template <Real U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return Tensor<U>(dims_, std::move(out));
  }

  bool operator==(const Tensor&) const = default;

  static std::size_t element_count(const std::vector<std::size_t>& dims) {
    if (dims.empty()) fail(ErrorCode::kInvalidArgument, "tensor rank must be at least 1");
    std::size_t n = 1;
    for (auto d : dims) {
      if (d == 0) fail(ErrorCode::kInvalidArgument, "tensor dims must be positive");
      n *= d;
    }
    return n;
  }

 private:
  std::vector<std::size_t> dims_;
  std::vector<T> data_;
};

template <Real T>
std::string shape_string(const Tensor<T>& t) {
  std::string s = "[";
  for (std::size_t i = 0; i < t.rank(); ++i) {
    if (i) s += "x";
    s += std::to_string(t.dim(i));
  }
  return s + "]";
}

}  // namespace fldplus::nn
