#include "fldplus/nn/adam.hpp"

#include <cmath>

namespace fldplus::nn {

template <Real T>
AdamState<T>::AdamState(AdamOptions options, std::span<const std::size_t> parameter_sizes)
    : options_(options) {
  if (!(options.beta1 >= 0 && options.beta1 < 1 && options.beta2 >= 0 && options.beta2 < 1)) {
    fail(ErrorCode::kInvalidArgument, "adam betas must lie in [0, 1)");
  }
  if (!(options.lr >= 0) || !(options.epsilon > 0)) {
    fail(ErrorCode::kInvalidArgument, "adam lr must be >= 0 and epsilon > 0");
  }
  for (auto n : parameter_sizes) {
    m_.emplace_back(n, T{0});
    v_.emplace_back(n, T{0});
  }
}

template <Real T>
AdamReport adam_step(std::span<const std::span<T>> params,
                     std::span<const std::span<const T>> grads, AdamState<T>& state) {
  auto& m = state.first_moment();
  auto& v = state.second_moment();
  if (params.size() != grads.size() || params.size() != m.size()) {
    fail(ErrorCode::kDimensionMismatch, "adam: parameter, gradient and moment lists differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size() != grads[i].size() || params[i].size() != m[i].size()) {
      fail(ErrorCode::kDimensionMismatch,
           "adam: shape mismatch for tensor " + std::to_string(i));
    }
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    for (T g : grads[i]) {
      if (!std::isfinite(g)) return AdamReport{false, i};
    }
  }

  state.advance();
  const auto& o = state.options();
  const double t = static_cast<double>(state.step());
  const double c1 = 1.0 - std::pow(o.beta1, t);
  const double c2 = 1.0 - std::pow(o.beta2, t);
  const T b1 = static_cast<T>(o.beta1);
  const T b2 = static_cast<T>(o.beta2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i];
    auto g = grads[i];
    auto& mi = m[i];
    auto& vi = v[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      mi[j] = b1 * mi[j] + (T{1} - b1) * g[j];
      vi[j] = b2 * vi[j] + (T{1} - b2) * g[j] * g[j];
      const double m_hat = static_cast<double>(mi[j]) / c1;
      const double v_hat = static_cast<double>(vi[j]) / c2;
      p[j] -= static_cast<T>(o.lr * m_hat / (std::sqrt(v_hat) + o.epsilon));
    }
  }
  return AdamReport{true, 0};
}

template <Real T>
double clip_global_norm(std::span<const std::span<T>> grads, double max_norm) {
  double sq = 0.0;
  for (auto g : grads) {
    for (T v : g) sq += static_cast<double>(v) * static_cast<double>(v);
  }
  const double norm = std::sqrt(sq);
  if (std::isfinite(norm) && norm > max_norm && norm > 0) {
    const T scale = static_cast<T>(max_norm / norm);
    for (auto g : grads) {
      for (T& v : g) v *= scale;
    }
  }
  return norm;
}

template class AdamState<float>;
template class AdamState<double>;
template AdamReport adam_step(std::span<const std::span<float>>,
                              std::span<const std::span<const float>>, AdamState<float>&);
template AdamReport adam_step(std::span<const std::span<double>>,
                              std::span<const std::span<const double>>, AdamState<double>&);
template double clip_global_norm(std::span<const std::span<float>>, double);
template double clip_global_norm(std::span<const std::span<double>>, double);

}  // namespace fldplus::nn
