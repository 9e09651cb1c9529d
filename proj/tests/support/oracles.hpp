#pragma once

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

namespace fldplus::testing {

// log|det A| by Gaussian elimination with partial pivoting; A is row-major n x n.
inline double log_abs_det(std::vector<double> a, std::size_t n) {
  double acc = 0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) pivot = r;
    }
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
    }
    const double p = a[col * n + col];
    if (p == 0.0) return -INFINITY;
    acc += std::log(std::abs(p));
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] / p;
      for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
    }
  }
  return acc;
}

// Central-difference Jacobian of f: R^n -> R^n, row-major J[i][j] = d f_i / d x_j.
inline std::vector<double> numeric_jacobian(
    const std::function<std::vector<double>(const std::vector<double>&)>& f,
    const std::vector<double>& x, double h) {
  const std::size_t n = x.size();
  std::vector<double> jac(n * n);
  std::vector<double> probe = x;
  for (std::size_t j = 0; j < n; ++j) {
    probe[j] = x[j] + h;
    const auto up = f(probe);
    probe[j] = x[j] - h;
    const auto down = f(probe);
    probe[j] = x[j];
    for (std::size_t i = 0; i < n; ++i) jac[i * n + j] = (up[i] - down[i]) / (2 * h);
  }
  return jac;
}

}  // namespace fldplus::testing
