#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fldplus/nn/tensor.hpp"

namespace fldplus::nn {

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <Real T>
class AdamState {
 public:
  AdamState(AdamOptions options, std::span<const std::size_t> parameter_sizes);

  const AdamOptions& options() const noexcept { return options_; }
  AdamOptions& options() noexcept { return options_; }
  std::uint64_t step() const noexcept { return step_; }
  const std::vector<std::vector<T>>& first_moment() const noexcept { return m_; }
  const std::vector<std::vector<T>>& second_moment() const noexcept { return v_; }
  std::vector<std::vector<T>>& first_moment() noexcept { return m_; }
  std::vector<std::vector<T>>& second_moment() noexcept { return v_; }
  void advance() noexcept { ++step_; }

 private:
  AdamOptions options_;
  std::uint64_t step_ = 0;
  std::vector<std::vector<T>> m_;
  std::vector<std::vector<T>> v_;
};

struct AdamReport {
  bool applied = false;
  std::size_t offending_tensor = 0;  // set when a non-finite gradient was seen
};

// Bias-corrected Adam update. A step with any non-finite gradient entry is
// rejected as a whole: parameters and moments are left untouched.
template <Real T>
[[nodiscard]] AdamReport adam_step(std::span<const std::span<T>> params,
                                   std::span<const std::span<const T>> grads,
                                   AdamState<T>& state);

// Rescales grads in place so their global L2 norm is at most max_norm.
// Returns the norm before clipping.
template <Real T>
double clip_global_norm(std::span<const std::span<T>> grads, double max_norm);

}  // namespace fldplus::nn
