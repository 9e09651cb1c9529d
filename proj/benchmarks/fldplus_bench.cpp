#include <benchmark/benchmark.h>

#include <random>

#include "fldplus/distortions/distortions.hpp"
#include "fldplus/experiments/procedural.hpp"
#include "fldplus/features/pipeline.hpp"
#include "fldplus/flow/flow_model.hpp"
#include "fldplus/metric/frechet.hpp"

using namespace fldplus;

namespace {

nn::Tensor<float> gaussian_rows(std::size_t rows, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal;
  auto t = nn::Tensor<float>::matrix(rows, dim);
  for (auto& v : t.storage()) v = normal(rng);
  return t;
}

flow::FlowModel<float> make_flow(std::size_t dim, std::size_t hidden) {
  flow::FlowConfig c;
  c.input_dim = dim;
  c.coupling_layers = 4;
  c.hidden_features = hidden;
  c.seed = 1;
  flow::FlowModel<float> m(c);
  m.randomize(2, 0.05);
  return m;
}

// args: dim, hidden
void BM_FlowLogProb(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  const auto model = make_flow(dim, static_cast<std::size_t>(state.range(1)));
  const auto batch = gaussian_rows(256, dim, 3);
  for (auto _ : state) benchmark::DoNotOptimize(model.log_prob_batch(batch));
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_FlowLogProb)->Args({2, 32})->Args({64, 32})->Args({256, 64});

void BM_FlowGradient(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  const auto model = make_flow(dim, static_cast<std::size_t>(state.range(1)));
  const auto batch = gaussian_rows(128, dim, 4);
  flow::FlowGradients<float> grads;
  for (auto _ : state) benchmark::DoNotOptimize(model.nll_and_gradient(batch, grads));
  state.SetItemsProcessed(state.iterations() * 128);
}
BENCHMARK(BM_FlowGradient)->Args({2, 32})->Args({64, 32})->Args({256, 64});

void BM_ToyExtract(benchmark::State& state) {
  const auto backbone = features::make_backbone("toy:size=64,channels=16-32-4,seed=0");
  const auto image = experiments::dead_leaves_image(64, 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(features::image_features(*backbone, image, features::PoolKind::kAverage));
  }
}
BENCHMARK(BM_ToyExtract);

void BM_Distortion(benchmark::State& state) {
  const auto kind = static_cast<distortions::Kind>(state.range(0));
  const double level = kind == distortions::Kind::kGaussianBlur ? 11.0 : 0.05;
  const auto image = experiments::dead_leaves_image(256, 6);
  for (auto _ : state) benchmark::DoNotOptimize(distortions::apply(kind, image, level, 7));
}
BENCHMARK(BM_Distortion)->DenseRange(0, 2);

void BM_FrechetDistance(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  features::FeatureSet a, b;
  a.dim = b.dim = dim;
  const auto ta = gaussian_rows(4 * dim, dim, 8);
  const auto tb = gaussian_rows(4 * dim, dim, 9);
  a.values.assign(ta.storage().begin(), ta.storage().end());
  b.values.assign(tb.storage().begin(), tb.storage().end());
  const auto ma = metric::gaussian_moments(a);
  const auto mb = metric::gaussian_moments(b);
  for (auto _ : state) benchmark::DoNotOptimize(metric::frechet_distance(ma, mb));
}
BENCHMARK(BM_FrechetDistance)->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
