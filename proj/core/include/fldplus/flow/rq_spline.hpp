#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fldplus/nn/tensor.hpp"

namespace fldplus::flow {

using nn::Real;

enum class Direction { kForward, kInverse };

// Floors applied when mapping unconstrained conditioner outputs to a spline.
struct SplineFloors {
  double min_bin_width = 1e-3;   // fraction of the interval width 2B
  double min_bin_height = 1e-3;  // fraction of the interval height 2B
  double min_derivative = 1e-3;
};

// Monotone rational-quadratic spline on [-B, B] with identity tails.
// widths and heights each sum to 2B; derivatives has K+1 knot slopes.
template <Real T>
struct RqSplineParams {
  std::vector<T> widths;
  std::vector<T> heights;
  std::vector<T> derivatives;
  T tail_bound = T{3};

  std::size_t bins() const noexcept { return widths.size(); }
};

template <Real T>
struct SplineValue {
  T value;
  T log_abs_deriv;
};

// Throws ErrorCode::kInvalidArgument on malformed parameters.
template <Real T>
void validate(const RqSplineParams<T>& params);

template <Real T>
SplineValue<T> rq_spline_apply(T x, const RqSplineParams<T>& params, Direction direction);

// Knot representation built once per coordinate from raw conditioner output
// and reused for evaluation and backpropagation. Raw layout for K bins is
// [K width logits | K height logits | K+1 derivative pre-activations].
template <Real T>
struct SplineKnots {
  std::size_t bins = 0;
  T tail_bound = T{3};
  std::vector<T> xs;  // K+1 knot abscissae, xs[0] = -B, xs[K] = B
  std::vector<T> ys;  // K+1 knot ordinates
  std::vector<T> ds;  // K+1 knot derivatives
  std::vector<T> width_softmax;
  std::vector<T> height_softmax;
  std::vector<T> deriv_sigmoid;  // d(softplus)/d(raw) per knot
  double width_scale = 0;        // 2B (1 - K min_width)
  double height_scale = 0;

  void resize(std::size_t k);
};

inline constexpr std::size_t raw_params_per_coordinate(std::size_t bins) noexcept {
  return 3 * bins + 1;
}

template <Real T>
void knots_from_raw(std::span<const T> raw, std::size_t bins, T tail_bound,
                    const SplineFloors& floors, SplineKnots<T>& out);

template <Real T>
void knots_from_params(const RqSplineParams<T>& params, SplineKnots<T>& out);

template <Real T>
SplineValue<T> spline_forward(const SplineKnots<T>& knots, T x);

template <Real T>
SplineValue<T> spline_inverse(const SplineKnots<T>& knots, T y);

// Backpropagates g_value * dy + g_logdet * d(log|dy/dx|) through the forward
// map. Writes d/d(raw) into grad_raw (size 3K+1, overwritten) and returns
// d/dx. Requires knots produced by knots_from_raw.
template <Real T>
T spline_backward(const SplineKnots<T>& knots, T x, T g_value, T g_logdet,
                  std::span<T> grad_raw);

}  // namespace fldplus::flow
