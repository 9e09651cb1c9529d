#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fldplus/flow/rq_spline.hpp"
#include "test_support.hpp"

namespace fldplus {
namespace {

using flow::Direction;
using flow::RqSplineParams;
using flow::SplineKnots;
using testing::relative_error;

RqSplineParams<double> random_params(std::size_t bins, double bound, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> size(0.05, 1.0);
  std::uniform_real_distribution<double> deriv(0.2, 4.0);
  RqSplineParams<double> p;
  p.tail_bound = bound;
  auto normalized = [&] {
    std::vector<double> v(bins);
    double s = 0;
    for (auto& x : v) s += (x = size(rng));
    for (auto& x : v) x *= 2 * bound / s;
    return v;
  };
  p.widths = normalized();
  p.heights = normalized();
  p.derivatives.resize(bins + 1);
  for (auto& d : p.derivatives) d = deriv(rng);
  return p;
}

std::vector<double> random_raw(std::size_t bins, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  std::vector<double> raw(flow::raw_params_per_coordinate(bins));
  for (auto& v : raw) v = normal(rng);
  return raw;
}

TEST(RqSpline, UniformBinsWithUnitSlopesIsIdentity) {
  RqSplineParams<double> p;
  p.tail_bound = 3.0;
  p.widths.assign(8, 0.75);
  p.heights.assign(8, 0.75);
  p.derivatives.assign(9, 1.0);
  for (double x = -3.0; x <= 3.0; x += 0.01) {
    const auto f = flow::rq_spline_apply(x, p, Direction::kForward);
    EXPECT_NEAR(f.value, x, 1e-12);
    EXPECT_NEAR(f.log_abs_deriv, 0.0, 1e-12);
    const auto i = flow::rq_spline_apply(x, p, Direction::kInverse);
    EXPECT_NEAR(i.value, x, 1e-12);
    EXPECT_NEAR(i.log_abs_deriv, 0.0, 1e-12);
  }
}

TEST(RqSpline, OutsideTailBoundIsIdentity) {
  const auto p = random_params(8, 3.0, 1);
  for (double x : {-100.0, -3.0001, 3.0001, 7.5, 1e6}) {
    for (auto dir : {Direction::kForward, Direction::kInverse}) {
      const auto r = flow::rq_spline_apply(x, p, dir);
      EXPECT_EQ(r.value, x);
      EXPECT_EQ(r.log_abs_deriv, 0.0);
    }
  }
}

TEST(RqSpline, MapsIntervalOntoItselfAndIsMonotone) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto p = random_params(6, 2.0, seed);
    EXPECT_NEAR(flow::rq_spline_apply(-2.0, p, Direction::kForward).value, -2.0, 1e-12);
    EXPECT_NEAR(flow::rq_spline_apply(2.0, p, Direction::kForward).value, 2.0, 1e-12);
    double prev = -3.0;
    for (double x = -2.0; x <= 2.0; x += 1e-3) {
      const double y = flow::rq_spline_apply(x, p, Direction::kForward).value;
      EXPECT_GT(y, prev);
      prev = y;
    }
  }
}

TEST(RqSpline, InverseRoundTripAndFiniteDifferenceSlope) {
  double worst_roundtrip = 0;
  double worst_slope = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto p = random_params(8, 3.0, seed);
    std::mt19937_64 rng(seed + 99);
    std::uniform_real_distribution<double> u(-2.999, 2.999);
    for (int i = 0; i < 200; ++i) {
      const double x = u(rng);
      const auto f = flow::rq_spline_apply(x, p, Direction::kForward);
      const auto b = flow::rq_spline_apply(f.value, p, Direction::kInverse);
      worst_roundtrip = std::max(worst_roundtrip, std::abs(b.value - x));
      EXPECT_NEAR(f.log_abs_deriv + b.log_abs_deriv, 0.0, 1e-9);
      const double h = 1e-6;
      const double fd = (flow::rq_spline_apply(x + h, p, Direction::kForward).value -
                         flow::rq_spline_apply(x - h, p, Direction::kForward).value) /
                        (2 * h);
      // Skip samples whose stencil straddles a knot, where the slope has a kink.
      const double dk = std::abs(std::log(fd) - f.log_abs_deriv);
      double knot = -3.0;
      double nearest = 1e9;
      for (double w : p.widths) nearest = std::min(nearest, std::abs(x - (knot += w)));
      if (nearest > 2 * h) worst_slope = std::max(worst_slope, dk);
    }
  }
  EXPECT_LE(worst_roundtrip, 1e-10);
  EXPECT_LE(worst_slope, 1e-6);
}

TEST(RqSpline, FloatRoundTrip) {
  const auto pd = random_params(8, 3.0, 5);
  RqSplineParams<float> p;
  p.tail_bound = 3.0f;
  p.widths.assign(pd.widths.begin(), pd.widths.end());
  p.heights.assign(pd.heights.begin(), pd.heights.end());
  p.derivatives.assign(pd.derivatives.begin(), pd.derivatives.end());
  for (float x = -2.99f; x < 3.0f; x += 0.013f) {
    const auto f = flow::rq_spline_apply(x, p, Direction::kForward);
    EXPECT_NEAR(flow::rq_spline_apply(f.value, p, Direction::kInverse).value, x, 1e-5f);
  }
}

TEST(RqSpline, MalformedParametersAreRejected) {
  auto p = random_params(4, 3.0, 2);
  p.derivatives[2] = 0.0;
  EXPECT_FLD_ERROR(flow::validate(p), ErrorCode::kInvalidArgument);
  p = random_params(4, 3.0, 2);
  p.widths[0] = -p.widths[0];
  EXPECT_FLD_ERROR(flow::validate(p), ErrorCode::kInvalidArgument);
  p = random_params(4, 3.0, 2);
  p.heights[1] += 0.5;
  EXPECT_FLD_ERROR(flow::validate(p), ErrorCode::kInvalidArgument);
  p = random_params(4, 3.0, 2);
  p.derivatives.pop_back();
  EXPECT_FLD_ERROR(flow::validate(p), ErrorCode::kInvalidArgument);
}

TEST(SplineKnots, ZeroRawParametersGiveIdentity) {
  SplineKnots<double> k;
  const std::vector<double> raw(flow::raw_params_per_coordinate(8), 0.0);
  flow::knots_from_raw<double>(raw, 8, 3.0, {}, k);
  for (double x = -3.0; x <= 3.0; x += 0.05) {
    const auto f = flow::spline_forward(k, x);
    EXPECT_NEAR(f.value, x, 1e-12);
    EXPECT_NEAR(f.log_abs_deriv, 0.0, 1e-12);
  }
}

TEST(SplineKnots, RawParametersRespectFloors) {
  SplineKnots<double> k;
  auto raw = random_raw(8, 3, 30.0);
  flow::knots_from_raw<double>(raw, 8, 3.0, {}, k);
  EXPECT_DOUBLE_EQ(k.xs.front(), -3.0);
  EXPECT_DOUBLE_EQ(k.xs.back(), 3.0);
  EXPECT_DOUBLE_EQ(k.ys.back(), 3.0);
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_GE(k.xs[i + 1] - k.xs[i], 6e-3 * (1 - 1e-12));
    EXPECT_GE(k.ys[i + 1] - k.ys[i], 6e-3 * (1 - 1e-12));
  }
  for (double d : k.ds) EXPECT_GE(d, 1e-3);
}

TEST(SplineKnots, ParamPathAgreesWithRawPath) {
  SplineKnots<double> from_raw;
  flow::knots_from_raw<double>(random_raw(5, 8, 1.0), 5, 2.5, {}, from_raw);
  RqSplineParams<double> p;
  p.tail_bound = 2.5;
  for (std::size_t i = 0; i < 5; ++i) {
    p.widths.push_back(from_raw.xs[i + 1] - from_raw.xs[i]);
    p.heights.push_back(from_raw.ys[i + 1] - from_raw.ys[i]);
  }
  p.derivatives = from_raw.ds;
  for (double x = -2.4; x < 2.5; x += 0.1) {
    const auto a = flow::spline_forward(from_raw, x);
    const auto b = flow::rq_spline_apply(x, p, Direction::kForward);
    EXPECT_NEAR(a.value, b.value, 1e-12);
    EXPECT_NEAR(a.log_abs_deriv, b.log_abs_deriv, 1e-10);
  }
}

// Objective a*y + c*log|dy/dx| as a function of (x, raw).
TEST(SplineBackward, MatchesFiniteDifferences) {
  const std::size_t bins = 6;
  const double a = 0.7;
  const double c = -1.3;
  double worst = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto raw = random_raw(bins, seed, 1.0);
    std::mt19937_64 rng(seed + 500);
    std::uniform_real_distribution<double> u(-2.9, 2.9);
    const double x = seed == 0 ? 5.0 : u(rng);  // one sample in the tail
    auto objective = [&](double xv) {
      SplineKnots<double> k;
      flow::knots_from_raw<double>(raw, bins, 3.0, {}, k);
      const auto f = flow::spline_forward(k, xv);
      return a * f.value + c * f.log_abs_deriv;
    };
    SplineKnots<double> k;
    flow::knots_from_raw<double>(raw, bins, 3.0, {}, k);
    std::vector<double> grad(raw.size());
    const double gx = flow::spline_backward<double>(k, x, a, c, grad);

    const double h = 1e-6;
    worst = std::max(worst, relative_error(gx, (objective(x + h) - objective(x - h)) / (2 * h)));
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const double orig = raw[i];
      raw[i] = orig + h;
      const double up = objective(x);
      raw[i] = orig - h;
      const double down = objective(x);
      raw[i] = orig;
      worst = std::max(worst, relative_error(grad[i], (up - down) / (2 * h)));
    }
  }
  EXPECT_LE(worst, 1e-4);
}

TEST(SplineBackward, TailHasNoParameterGradient) {
  SplineKnots<double> k;
  const auto raw = random_raw(4, 1, 1.0);
  flow::knots_from_raw<double>(raw, 4, 3.0, {}, k);
  std::vector<double> grad(raw.size(), 9.0);
  EXPECT_EQ(flow::spline_backward<double>(k, -4.0, 2.0, 1.0, grad), 2.0);
  for (double g : grad) EXPECT_EQ(g, 0.0);
}

}  // namespace
}  // namespace fldplus
