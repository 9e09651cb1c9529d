#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fldplus/nn/tensor.hpp"

namespace fldplus::nn {

// Central-difference gradient of a scalar function of a tensor.
template <Real T>
Tensor<T> finite_diff_grad(const std::function<T(const Tensor<T>&)>& f, const Tensor<T>& x,
                           T eps) {
  Tensor<T> probe = x;
  Tensor<T> grad(x.dims());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T original = probe[i];
    probe[i] = original + eps;
    const T up = f(probe);
    probe[i] = original - eps;
    const T down = f(probe);
    probe[i] = original;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      fail(ErrorCode::kNonFinite,
           "function is not finite near coordinate " + std::to_string(i));
    }
    grad[i] = (up - down) / (T{2} * eps);
  }
  return grad;
}

// Same estimate for state held outside the function: each entry of `values`
// is perturbed in place and f() re-evaluated.
template <Real T, typename F>
std::vector<T> finite_diff_inplace(std::span<T> values, T eps, F&& f) {
  std::vector<T> grad(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const T original = values[i];
    values[i] = original + eps;
    const T up = f();
    values[i] = original - eps;
    const T down = f();
    values[i] = original;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      fail(ErrorCode::kNonFinite,
           "function is not finite near coordinate " + std::to_string(i));
    }
    grad[i] = (up - down) / (T{2} * eps);
  }
  return grad;
}

}  // namespace fldplus::nn
