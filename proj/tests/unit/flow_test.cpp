#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "fldplus/flow/flow_model.hpp"
#include "fldplus/nn/finite_diff.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace fldplus {
namespace {

using flow::FlowConfig;
using flow::FlowModel;
using nn::Tensor;
using testing::random_matrix;
using testing::relative_error;

FlowConfig small_config(std::size_t dim, std::size_t couplings, std::uint64_t seed,
                        nn::Activation act = nn::Activation::kTanh) {
  FlowConfig cfg;
  cfg.input_dim = dim;
  cfg.coupling_layers = couplings;
  cfg.bins = 4;
  cfg.tail_bound = 3.0;
  cfg.hidden_features = 8;
  cfg.hidden_layers = 2;
  cfg.activation = act;
  cfg.seed = seed;
  return cfg;
}

template <typename T>
FlowModel<T> random_flow(std::size_t dim, std::size_t couplings, std::uint64_t seed,
                         double scale = 0.5) {
  FlowModel<T> m(small_config(dim, couplings, seed));
  m.randomize(seed + 7, scale);
  return m;
}

std::vector<double> as_vector(std::span<const double> s) { return {s.begin(), s.end()}; }

TEST(FlowModel, ZeroLayerFlowAtOriginIsStandardNormalDensity) {
  const auto m = FlowModel<double>::base_only(2);
  const std::vector<double> origin{0.0, 0.0};
  EXPECT_NEAR(m.log_prob(origin), -std::log(2 * std::numbers::pi), 1e-12);
  EXPECT_NEAR(m.log_prob(origin), -1.837877, 1e-6);
}

TEST(FlowModel, ZeroLayerFlowIsPermutationInvariant) {
  const auto m = FlowModel<double>::base_only(4);
  const std::vector<double> x{0.3, -1.2, 2.0, 0.7};
  const std::vector<double> y{2.0, 0.3, 0.7, -1.2};
  EXPECT_DOUBLE_EQ(m.log_prob(x), m.log_prob(y));
}

TEST(FlowModel, FreshCouplingIsIdentity) {
  // actnorm at unit scale + zero-output conditioner: the coupling must be y = x.
  FlowModel<double> m(small_config(6, 1, 3));
  std::vector<flow::FlowLayer<double>> layers = m.layers();
  FlowModel<double> ready(m.config(), layers, true);
  const std::vector<double> x{0.1, -2.5, 1.7, 0.0, 4.0, -0.3};
  const auto out = ready.forward(x);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(out.value[i], x[i], 1e-12);
  EXPECT_NEAR(out.logdet, 0.0, 1e-12);
}

TEST(FlowModel, RequiresActnormInitialization) {
  FlowModel<double> m(small_config(4, 2, 1));
  EXPECT_FALSE(m.actnorm_initialized());
  const std::vector<double> x(4, 0.0);
  EXPECT_FLD_ERROR(m.log_prob(x), ErrorCode::kInvalidArgument);
}

TEST(FlowModel, RejectsWrongDimension) {
  const auto m = random_flow<double>(4, 2, 1);
  const std::vector<double> x(5, 0.0);
  EXPECT_FLD_ERROR(m.log_prob(x), ErrorCode::kDimensionMismatch);
  EXPECT_FLD_ERROR(m.log_prob_batch(random_matrix<double>(3, 3, 1)), ErrorCode::kDimensionMismatch);
}

TEST(FlowModel, CouplingRoundTripFloat) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto m = random_flow<float>(6, 1, seed);
    const auto x = random_matrix<float>(20, 6, seed + 40);
    for (std::size_t r = 0; r < 20; ++r) {
      const auto f = m.forward(x.row(r));
      const auto b = m.inverse(f.value);
      for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(b.value[i], x(r, i), 1e-5f);
    }
  }
}

TEST(FlowModel, InvertibilityAndLogdetConsistency) {
  double worst64 = 0;
  double worst_logdet = 0;
  float worst32 = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto md = random_flow<double>(7, 4, seed);
    // float storage error grows with the inverse Jacobian, so the 32-bit check
    // uses milder random models (|logdet| up to ~7 here)
    const auto mf = random_flow<float>(7, 4, seed, 0.3);
    const auto x = random_matrix<double>(25, 7, seed + 1000, 1.5);
    const auto xf = x.cast<float>();
    for (std::size_t r = 0; r < 25; ++r) {
      const auto f = md.forward(x.row(r));
      const auto b = md.inverse(f.value);
      worst_logdet = std::max(worst_logdet, std::abs(f.logdet + b.logdet));
      for (std::size_t i = 0; i < 7; ++i) worst64 = std::max(worst64, std::abs(b.value[i] - x(r, i)));
      const auto ff = mf.forward(xf.row(r));
      const auto bf = mf.inverse(ff.value);
      for (std::size_t i = 0; i < 7; ++i) worst32 = std::max(worst32, std::abs(bf.value[i] - xf(r, i)));
    }
  }
  EXPECT_LE(worst64, 1e-10);
  EXPECT_LE(worst32, 1e-5f);
  EXPECT_LE(worst_logdet, 1e-6);
}

TEST(FlowModel, SingleCouplingLogdetMatchesDenseJacobian) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto m = random_flow<double>(4, 1, seed);
    const auto x = as_vector(random_matrix<double>(1, 4, seed + 3).row(0));
    const auto jac = testing::numeric_jacobian(
        [&](const std::vector<double>& v) { return m.forward(v).value; }, x, 1e-6);
    EXPECT_NEAR(m.forward(x).logdet, testing::log_abs_det(jac, 4), 1e-4);
  }
}

TEST(FlowModel, DeepFlowLogdetMatchesDenseJacobian) {
  for (std::size_t dim : {2u, 3u, 5u, 8u}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto m = random_flow<double>(dim, 4, seed * 31 + dim);
      const auto x = as_vector(random_matrix<double>(1, dim, seed + 17).row(0));
      const auto jac = testing::numeric_jacobian(
          [&](const std::vector<double>& v) { return m.forward(v).value; }, x, 1e-6);
      EXPECT_NEAR(m.forward(x).logdet, testing::log_abs_det(jac, dim), 1e-4)
          << "dim " << dim << " seed " << seed;
    }
  }
}

TEST(ActNorm, UnitScaleZeroShiftIsIdentity) {
  flow::ActNormLayer<double> a{{0, 0, 0}, {0, 0, 0}};
  FlowModel<double> m(small_config(3, 0, 0), {a}, true);
  const std::vector<double> x{1.5, -2.0, 0.25};
  const auto out = m.forward(x);
  EXPECT_EQ(out.value, x);
  EXPECT_EQ(out.logdet, 0.0);
}

TEST(ActNorm, InitStandardizesTheBatch) {
  flow::ActNormLayer<double> a{{0, 0, 0}, {0, 0, 0}};
  FlowModel<double> m(small_config(3, 0, 0), {a}, false);
  auto batch = random_matrix<double>(500, 3, 12, 1.0);
  for (std::size_t r = 0; r < 500; ++r) {
    batch(r, 0) = 4.0 * batch(r, 0) + 10.0;
    batch(r, 1) = 0.01 * batch(r, 1) - 3.0;
  }
  m.initialize_actnorm(batch);
  ASSERT_TRUE(m.actnorm_initialized());
  for (std::size_t j = 0; j < 3; ++j) {
    double mean = 0;
    double sq = 0;
    for (std::size_t r = 0; r < 500; ++r) {
      const double z = m.forward(batch.row(r)).value[j];
      mean += z;
      sq += z * z;
    }
    mean /= 500;
    const double var = sq / 500 - mean * mean;
    EXPECT_LE(std::abs(mean), 1e-5);
    EXPECT_GE(var, 0.99);
    EXPECT_LE(var, 1.01);
  }
}

TEST(ActNorm, ZeroVarianceDimensionIsFlooredNotFatal) {
  flow::ActNormLayer<double> a{{0, 0}, {0, 0}};
  FlowModel<double> m(small_config(2, 0, 0), {a}, false);
  auto batch = random_matrix<double>(10, 2, 3);
  for (std::size_t r = 0; r < 10; ++r) batch(r, 1) = 5.0;
  m.initialize_actnorm(batch);
  const auto& layer = std::get<flow::ActNormLayer<double>>(m.layers()[0]);
  EXPECT_NEAR(layer.log_scale[1], std::log(1e-6), 1e-9);
  EXPECT_TRUE(std::isfinite(m.log_prob(batch.row(0))));
}

TEST(ActNorm, LogdetMatchesDenseJacobian) {
  flow::ActNormLayer<double> a{{0.5, -1.0, 2.0}, {0.3, -0.8, 1.1}};
  FlowModel<double> m(small_config(3, 0, 0), {a}, true);
  const std::vector<double> x{0.2, 1.4, -0.6};
  const auto jac = testing::numeric_jacobian(
      [&](const std::vector<double>& v) { return m.forward(v).value; }, x, 1e-6);
  EXPECT_NEAR(m.forward(x).logdet, testing::log_abs_det(jac, 3), 1e-6);
  EXPECT_NEAR(m.forward(x).logdet, -(0.3 - 0.8 + 1.1), 1e-12);
}

TEST(FlowModel, DensityIntegratesToOneIn2D) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    FlowConfig cfg = small_config(2, 3, seed);
    cfg.bins = 8;
    cfg.hidden_features = 16;
    FlowModel<double> m(cfg);
    m.randomize(seed, 0.4);
    // Grid spans +-6 standard deviations around the sample mean on each axis.
    const auto draws = m.sample(20000, seed + 100);
    double lo[2];
    double step[2];
    for (std::size_t j = 0; j < 2; ++j) {
      double mean = 0;
      double sq = 0;
      for (std::size_t r = 0; r < draws.rows(); ++r) {
        mean += draws(r, j);
        sq += draws(r, j) * draws(r, j);
      }
      mean /= static_cast<double>(draws.rows());
      const double sd = std::sqrt(sq / static_cast<double>(draws.rows()) - mean * mean);
      lo[j] = mean - 6 * sd;
      step[j] = 12 * sd / 600;
    }
    const int steps = 600;
    auto grid = Tensor<double>::matrix(static_cast<std::size_t>(steps * steps), 2);
    std::size_t r = 0;
    for (int i = 0; i < steps; ++i) {
      for (int j = 0; j < steps; ++j, ++r) {
        grid(r, 0) = lo[0] + (i + 0.5) * step[0];
        grid(r, 1) = lo[1] + (j + 0.5) * step[1];
      }
    }
    const double h2 = step[0] * step[1];
    double mass = 0;
    for (double lp : m.log_prob_batch(grid)) mass += std::exp(lp) * h2;
    EXPECT_NEAR(mass, 1.0, 0.01) << "seed " << seed;
  }
}

TEST(FlowModel, BatchLogProbMatchesRowsAndIgnoresWorkerCount) {
  const auto m = random_flow<float>(5, 3, 9);
  const auto x = random_matrix<float>(600, 5, 9);
  const auto one = m.log_prob_batch(x, 1);
  const auto four = m.log_prob_batch(x, 4);
  EXPECT_EQ(one, four);
  // Single-row and batched GEMMs may round differently in the last bits.
  for (std::size_t r = 0; r < 600; r += 37) EXPECT_NEAR(one[r], m.log_prob(x.row(r)), 1e-4f * std::abs(one[r]));
}

TEST(FlowModel, NonFiniteIntermediateNamesTheLayer) {
  auto m = random_flow<double>(4, 2, 3);
  std::get<flow::ActNormLayer<double>>(m.mutable_layers()[3]).log_scale[0] = -1000.0;
  try {
    (void)m.log_prob(std::vector<double>{0.5, 0.5, 0.5, 0.5});
    FAIL() << "expected a non-finite error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFinite);
    EXPECT_NE(std::string(e.what()).find("layer 3"), std::string::npos) << e.what();
  }
}

TEST(FlowSample, ZeroLayerFlowReturnsBaseDraws) {
  const auto m = FlowModel<double>::base_only(3);
  const auto s = m.sample(4, 123);
  std::mt19937_64 rng(123);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(s[i], normal(rng));
}

TEST(FlowSample, SameSeedSameSamples) {
  const auto m = random_flow<float>(4, 3, 2);
  EXPECT_EQ(m.sample(50, 7), m.sample(50, 7));
  EXPECT_NE(m.sample(50, 7), m.sample(50, 8));
}

TEST(FlowSample, SamplesInvertToBaseDraws) {
  const auto m = random_flow<double>(3, 3, 5);
  const auto s = m.sample(10, 99);
  const auto base = FlowModel<double>::base_only(3).sample(10, 99);
  for (std::size_t r = 0; r < 10; ++r) {
    const auto z = m.forward(s.row(r)).value;
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(z[i], base(r, i), 1e-9);
  }
}

// Mean NLL of a batch; gradients for every trainable tensor vs central differences.
TEST(FlowGradient, MatchesFiniteDifferencesOverSeeds) {
  double worst = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto m = random_flow<double>(5, 3, seed, 0.7);
    const auto batch = random_matrix<double>(6, 5, seed + 300, 1.3);
    flow::FlowGradients<double> grads;
    const double nll = m.nll_and_gradient(batch, grads);
    auto loss = [&] {
      double s = 0;
      for (double lp : m.log_prob_batch(batch)) s -= lp;
      return s / 6.0;
    };
    EXPECT_NEAR(nll, loss(), 1e-12);
    auto params = m.parameters();
    ASSERT_EQ(params.size(), grads.size());
    for (std::size_t p = 0; p < params.size(); ++p) {
      const auto numeric = nn::finite_diff_inplace<double>(params[p].values, 1e-6, loss);
      for (std::size_t i = 0; i < numeric.size(); ++i) {
        const double e = relative_error(grads[p][i], numeric[i]);
        if (e > worst) worst = e;
        EXPECT_LE(e, 1e-4) << params[p].name << "[" << i << "] seed " << seed << " analytic " << grads[p][i] << " numeric " << numeric[i];
      }
    }
  }
  EXPECT_LE(worst, 1e-4);
}

TEST(FlowGradient, ReluConditionerAlsoMatches) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    FlowModel<double> m(small_config(4, 2, seed, nn::Activation::kRelu));
    m.randomize(seed, 0.5);
    const auto batch = random_matrix<double>(5, 4, seed + 50);
    flow::FlowGradients<double> grads;
    (void)m.nll_and_gradient(batch, grads);
    auto loss = [&] {
      double s = 0;
      for (double lp : m.log_prob_batch(batch)) s -= lp;
      return s / 5.0;
    };
    auto params = m.parameters();
    for (std::size_t p = 0; p < params.size(); ++p) {
      const auto numeric = nn::finite_diff_inplace<double>(params[p].values, 1e-6, loss);
      for (std::size_t i = 0; i < numeric.size(); ++i) {
        EXPECT_LE(relative_error(grads[p][i], numeric[i]), 1e-4) << params[p].name;
      }
    }
  }
}

TEST(FlowModel, ParameterNamesAreUniqueAndStable) {
  auto m = random_flow<float>(4, 2, 1);
  std::set<std::string> names;
  for (const auto& p : m.parameters()) EXPECT_TRUE(names.insert(p.name).second) << p.name;
  EXPECT_TRUE(names.count("layers.0.shift"));
  EXPECT_TRUE(names.count("layers.1.net.0.weight"));
  EXPECT_EQ(m.parameter_count(), static_cast<const FlowModel<float>&>(m).parameter_count());
}

}  // namespace
}  // namespace fldplus
