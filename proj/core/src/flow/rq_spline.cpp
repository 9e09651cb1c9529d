#include "fldplus/flow/rq_spline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace fldplus::flow {

namespace {

template <Real T>
std::size_t find_bin(const std::vector<T>& knots, T v, std::size_t bins) {
  const auto it = std::upper_bound(knots.begin(), knots.end(), v);
  const auto idx = static_cast<std::ptrdiff_t>(it - knots.begin()) - 1;
  return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(idx, 0, bins - 1));
}

template <Real T>
T softplus(T v) {
  return v > T{20} ? v : std::log1p(std::exp(v));
}

template <Real T>
T sigmoid(T v) {
  return T{1} / (T{1} + std::exp(-v));
}

template <Real T>
void softmax(std::span<const T> logits, std::vector<T>& out) {
  const T mx = *std::max_element(logits.begin(), logits.end());
  T sum = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (auto& v : out) v /= sum;
}

// Positions from bin sizes, with the endpoints pinned to exactly -B and B.
template <Real T>
void cumulative_knots(std::span<const T> sizes, T tail_bound, std::vector<T>& out) {
  out[0] = -tail_bound;
  T acc = -tail_bound;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    acc += sizes[i];
    out[i + 1] = acc;
  }
  out[sizes.size()] = tail_bound;
}

}  // namespace

template <Real T>
void SplineKnots<T>::resize(std::size_t k) {
  bins = k;
  xs.resize(k + 1);
  ys.resize(k + 1);
  ds.resize(k + 1);
  width_softmax.resize(k);
  height_softmax.resize(k);
  deriv_sigmoid.resize(k + 1);
}

template <Real T>
void validate(const RqSplineParams<T>& p) {
  const std::size_t k = p.widths.size();
  if (k == 0 || p.heights.size() != k || p.derivatives.size() != k + 1) {
    fail(ErrorCode::kInvalidArgument, "spline needs K widths, K heights and K+1 derivatives");
  }
  if (!(p.tail_bound > 0) || !std::isfinite(p.tail_bound)) {
    fail(ErrorCode::kInvalidArgument, "spline tail bound must be positive");
  }
  auto positive = [](const std::vector<T>& v) {
    return std::all_of(v.begin(), v.end(), [](T x) { return x > T{0} && std::isfinite(x); });
  };
  if (!positive(p.widths) || !positive(p.heights) || !positive(p.derivatives)) {
    fail(ErrorCode::kInvalidArgument, "spline bins and derivatives must be positive");
  }
  const double span = 2.0 * static_cast<double>(p.tail_bound);
  const double tol = 1e-4 * span;
  const double ws = std::accumulate(p.widths.begin(), p.widths.end(), 0.0);
  const double hs = std::accumulate(p.heights.begin(), p.heights.end(), 0.0);
  if (std::abs(ws - span) > tol || std::abs(hs - span) > tol) {
    fail(ErrorCode::kInvalidArgument, "spline widths and heights must each sum to 2B");
  }
}

template <Real T>
void knots_from_params(const RqSplineParams<T>& params, SplineKnots<T>& out) {
  validate(params);
  out.resize(params.bins());
  out.tail_bound = params.tail_bound;
  cumulative_knots<T>(params.widths, params.tail_bound, out.xs);
  cumulative_knots<T>(params.heights, params.tail_bound, out.ys);
  std::copy(params.derivatives.begin(), params.derivatives.end(), out.ds.begin());
}

template <Real T>
void knots_from_raw(std::span<const T> raw, std::size_t bins, T tail_bound,
                    const SplineFloors& floors, SplineKnots<T>& out) {
  if (raw.size() != raw_params_per_coordinate(bins)) {
    fail(ErrorCode::kDimensionMismatch, "raw spline parameter count must be 3K+1");
  }
  if (floors.min_bin_width * static_cast<double>(bins) >= 1.0 ||
      floors.min_bin_height * static_cast<double>(bins) >= 1.0) {
    fail(ErrorCode::kInvalidArgument, "minimum bin size too large for the bin count");
  }
  out.resize(bins);
  out.tail_bound = tail_bound;
  const double span = 2.0 * static_cast<double>(tail_bound);
  out.width_scale = span * (1.0 - floors.min_bin_width * static_cast<double>(bins));
  out.height_scale = span * (1.0 - floors.min_bin_height * static_cast<double>(bins));

  softmax<T>(raw.subspan(0, bins), out.width_softmax);
  softmax<T>(raw.subspan(bins, bins), out.height_softmax);

  // Sizes are staged in ds before the derivative pass overwrites it.
  const T min_w = static_cast<T>(span * floors.min_bin_width);
  const T min_h = static_cast<T>(span * floors.min_bin_height);
  std::vector<T>& scratch = out.ds;
  for (std::size_t i = 0; i < bins; ++i) {
    scratch[i] = min_w + static_cast<T>(out.width_scale) * out.width_softmax[i];
  }
  cumulative_knots<T>(std::span<const T>(scratch.data(), bins), tail_bound, out.xs);
  for (std::size_t i = 0; i < bins; ++i) {
    scratch[i] = min_h + static_cast<T>(out.height_scale) * out.height_softmax[i];
  }
  cumulative_knots<T>(std::span<const T>(scratch.data(), bins), tail_bound, out.ys);

  // Zero raw input yields unit slope: softplus(shift) = 1 - min_derivative.
  const T min_d = static_cast<T>(floors.min_derivative);
  const T shift = static_cast<T>(std::log(std::expm1(1.0 - floors.min_derivative)));
  for (std::size_t i = 0; i <= bins; ++i) {
    const T a = raw[2 * bins + i] + shift;
    out.ds[i] = min_d + softplus(a);
    out.deriv_sigmoid[i] = sigmoid(a);
  }
}

// Per-bin arithmetic runs in double for both precisions; float models
// otherwise lose ~1e-5 in forward/inverse round trips through deep stacks.
template <Real T>
SplineValue<T> spline_forward(const SplineKnots<T>& k, T x_in) {
  if (!(x_in >= -k.tail_bound && x_in <= k.tail_bound)) return {x_in, T{0}};
  const std::size_t b = find_bin(k.xs, x_in, k.bins);
  const double x = x_in;
  const double x0 = k.xs[b];
  const double w = static_cast<double>(k.xs[b + 1]) - x0;
  const double h = static_cast<double>(k.ys[b + 1]) - static_cast<double>(k.ys[b]);
  const double s = h / w;
  const double d0 = k.ds[b];
  const double d1 = k.ds[b + 1];
  const double xi = std::clamp((x - x0) / w, 0.0, 1.0);
  const double t = xi * (1.0 - xi);
  const double num = h * (s * xi * xi + d0 * t);
  const double den = s + (d0 + d1 - 2.0 * s) * t;
  const double y = static_cast<double>(k.ys[b]) + num / den;
  const double g = d1 * xi * xi + 2.0 * s * t + d0 * (1.0 - xi) * (1.0 - xi);
  const double log_deriv = 2.0 * std::log(s) + std::log(g) - 2.0 * std::log(den);
  return {static_cast<T>(y), static_cast<T>(log_deriv)};
}

template <Real T>
SplineValue<T> spline_inverse(const SplineKnots<T>& k, T y_in) {
  if (!(y_in >= -k.tail_bound && y_in <= k.tail_bound)) return {y_in, T{0}};
  const std::size_t b = find_bin(k.ys, y_in, k.bins);
  const double x0 = k.xs[b];
  const double y0 = k.ys[b];
  const double w = static_cast<double>(k.xs[b + 1]) - x0;
  const double h = static_cast<double>(k.ys[b + 1]) - y0;
  const double s = h / w;
  const double d0 = k.ds[b];
  const double d1 = k.ds[b + 1];
  const double dy = static_cast<double>(y_in) - y0;
  const double curv = d0 + d1 - 2.0 * s;
  const double a = h * (s - d0) + dy * curv;
  const double bq = h * d0 - dy * curv;
  const double c = -s * dy;
  const double disc = std::max(bq * bq - 4.0 * a * c, 0.0);
  // Root form 2c / (-b - sqrt(disc)) stays accurate when a is near zero.
  const double denom = -bq - std::sqrt(disc);
  const double xi = denom == 0.0 ? 0.0 : std::clamp(2.0 * c / denom, 0.0, 1.0);
  const double x = x0 + xi * w;
  const double t = xi * (1.0 - xi);
  const double den = s + curv * t;
  const double g = d1 * xi * xi + 2.0 * s * t + d0 * (1.0 - xi) * (1.0 - xi);
  const double log_deriv = 2.0 * std::log(s) + std::log(g) - 2.0 * std::log(den);
  return {static_cast<T>(x), static_cast<T>(-log_deriv)};
}

template <Real T>
SplineValue<T> rq_spline_apply(T x, const RqSplineParams<T>& params, Direction direction) {
  SplineKnots<T> knots;
  knots_from_params(params, knots);
  return direction == Direction::kForward ? spline_forward(knots, x)
                                          : spline_inverse(knots, x);
}

template <Real T>
T spline_backward(const SplineKnots<T>& k, T x, T g_value, T g_logdet, std::span<T> grad_raw) {
  const std::size_t bins = k.bins;
  std::fill(grad_raw.begin(), grad_raw.end(), T{0});
  if (!(x >= -k.tail_bound && x <= k.tail_bound)) return g_value;

  const std::size_t b = find_bin(k.xs, x, bins);
  const T w = k.xs[b + 1] - k.xs[b];
  const T h = k.ys[b + 1] - k.ys[b];
  const T s = h / w;
  const T d0 = k.ds[b];
  const T d1 = k.ds[b + 1];
  const T xi = std::clamp((x - k.xs[b]) / w, T{0}, T{1});
  const T om = T{1} - xi;
  const T t = xi * om;
  const T curv = d0 + d1 - T{2} * s;
  const T num = h * (s * xi * xi + d0 * t);
  const T den = s + curv * t;
  const T den2 = den * den;
  const T g = d1 * xi * xi + T{2} * s * t + d0 * om * om;

  // Partials of y (value) and L (log-derivative) with s, h, xi independent.
  const T dy_dh = (s * xi * xi + d0 * t) / den;
  const T dy_ds = (h * xi * xi * den - num * (T{1} - T{2} * t)) / den2;
  const T dy_dxi =
      (h * (T{2} * s * xi + d0 * (T{1} - T{2} * xi)) * den - num * curv * (T{1} - T{2} * xi)) /
      den2;
  const T dy_dd0 = (h * t * den - num * t) / den2;
  const T dy_dd1 = -num * t / den2;

  const T dl_ds = T{2} / s + T{2} * t / g - T{2} * (T{1} - T{2} * t) / den;
  const T dl_dxi = (T{2} * d1 * xi + T{2} * s * (T{1} - T{2} * xi) - T{2} * d0 * om) / g -
                   T{2} * curv * (T{1} - T{2} * xi) / den;
  const T dl_dd0 = om * om / g - T{2} * t / den;
  const T dl_dd1 = xi * xi / g - T{2} * t / den;

  // Combined upstream weights.
  const T gxi = g_value * dy_dxi + g_logdet * dl_dxi;
  const T gs = g_value * dy_ds + g_logdet * dl_ds;
  const T gh_explicit = g_value * dy_dh;
  const T gd0 = g_value * dy_dd0 + g_logdet * dl_dd0;
  const T gd1 = g_value * dy_dd1 + g_logdet * dl_dd1;

  // xi = (x - x_b) / w, s = h / w.
  const T g_x = gxi / w;
  const T g_xb = -gxi / w;
  const T g_w = -gxi * xi / w - gs * s / w;
  const T g_h = gh_explicit + gs / w;
  const T g_yb = g_value;

  // Knot positions are cumulative sums of bin sizes, x_b = -B + sum_{i<b} W_i,
  // so bins left of b receive g_xb, bin b receives g_w, later bins nothing.
  // The softmax pullback is then sc * sm_i * (g_i - <sm, g>).
  auto softmax_backward = [&](const std::vector<T>& sm, T g_left, T g_own, double scale,
                              std::span<T> out) {
    T left_mass = 0;
    for (std::size_t i = 0; i < b; ++i) left_mass += sm[i];
    const T dot = g_left * left_mass + g_own * sm[b];
    const T sc = static_cast<T>(scale);
    for (std::size_t i = 0; i < bins; ++i) {
      const T gi = i < b ? g_left : (i == b ? g_own : T{0});
      out[i] = sc * sm[i] * (gi - dot);
    }
  };
  softmax_backward(k.width_softmax, g_xb, g_w, k.width_scale, grad_raw.subspan(0, bins));
  softmax_backward(k.height_softmax, g_yb, g_h, k.height_scale, grad_raw.subspan(bins, bins));
  grad_raw[2 * bins + b] = gd0 * k.deriv_sigmoid[b];
  grad_raw[2 * bins + b + 1] = gd1 * k.deriv_sigmoid[b + 1];
  return g_x;
}

#define FLDPLUS_INSTANTIATE_SPLINE(T)                                                      \
  template struct SplineKnots<T>;                                                          \
  template void validate(const RqSplineParams<T>&);                                        \
  template SplineValue<T> rq_spline_apply(T, const RqSplineParams<T>&, Direction);         \
  template void knots_from_raw(std::span<const T>, std::size_t, T, const SplineFloors&,    \
                               SplineKnots<T>&);                                           \
  template void knots_from_params(const RqSplineParams<T>&, SplineKnots<T>&);              \
  template SplineValue<T> spline_forward(const SplineKnots<T>&, T);                        \
  template SplineValue<T> spline_inverse(const SplineKnots<T>&, T);                        \
  template T spline_backward(const SplineKnots<T>&, T, T, T, std::span<T>);

FLDPLUS_INSTANTIATE_SPLINE(float)
FLDPLUS_INSTANTIATE_SPLINE(double)

#undef FLDPLUS_INSTANTIATE_SPLINE

}  // namespace fldplus::flow
