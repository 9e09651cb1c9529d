#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fldplus/flow/rq_spline.hpp"
#include "fldplus/nn/mlp.hpp"
#include "fldplus/nn/tensor.hpp"

namespace fldplus::flow {

struct FlowConfig {
  std::size_t input_dim = 0;
  std::size_t coupling_layers = 8;
  std::size_t bins = 8;
  double tail_bound = 3.0;
  std::size_t hidden_features = 512;
  std::size_t hidden_layers = 2;
  nn::Activation activation = nn::Activation::kRelu;
  std::uint64_t seed = 0;
  SplineFloors floors;

  void validate() const;
};

// y = (x - shift) * exp(-log_scale); log|det| = -sum(log_scale).
template <Real T>
struct ActNormLayer {
  std::vector<T> shift;
  std::vector<T> log_scale;
};

// y[i] = x[forward[i]].
struct PermutationLayer {
  std::vector<std::uint32_t> forward;
  std::vector<std::uint32_t> inverse;

  static PermutationLayer from_forward(std::vector<std::uint32_t> forward);
};

// Identity coordinates pass through and condition one spline per transform
// coordinate; the conditioner emits 3K+1 raw values per transform coordinate.
template <Real T>
struct CouplingLayer {
  std::vector<std::uint32_t> identity;
  std::vector<std::uint32_t> transform;
  nn::Mlp<T> conditioner;
};

template <Real T>
using FlowLayer = std::variant<ActNormLayer<T>, PermutationLayer, CouplingLayer<T>>;

template <typename V>
struct ParamView {
  std::string name;
  std::vector<std::size_t> dims;
  std::span<V> values;
};

// One gradient vector per entry of FlowModel::parameters(), same order.
template <Real T>
using FlowGradients = std::vector<std::vector<T>>;

template <Real T>
struct Transformed {
  std::vector<T> value;
  T logdet;
};

template <Real T>
class FlowModel {
 public:
  FlowModel() = default;

  // Builds actnorm -> coupling -> permutation blocks. Couplings start as the
  // identity map (zeroed conditioner output layer).
  explicit FlowModel(const FlowConfig& config);

  // Base distribution only: log_prob is the standard-normal log density.
  static FlowModel base_only(std::size_t dim);

  // Assembles a model from explicit layers (used by checkpoint loading).
  FlowModel(FlowConfig config, std::vector<FlowLayer<T>> layers, bool actnorm_initialized);

  std::size_t dim() const noexcept { return config_.input_dim; }
  const FlowConfig& config() const noexcept { return config_; }
  const std::vector<FlowLayer<T>>& layers() const noexcept { return layers_; }
  std::vector<FlowLayer<T>>& mutable_layers() noexcept { return layers_; }
  bool actnorm_initialized() const noexcept { return actnorm_initialized_; }

  // Data-dependent init: every actnorm maps the batch (as seen at that depth)
  // to zero mean and unit variance per dimension.
  void initialize_actnorm(const nn::Tensor<T>& batch);

  Transformed<T> forward(std::span<const T> x) const;
  Transformed<T> inverse(std::span<const T> z) const;
  T log_prob(std::span<const T> x) const;

  // Rows are evaluated in fixed-size chunks, so per-row results do not depend
  // on the worker count.
  std::vector<T> log_prob_batch(const nn::Tensor<T>& batch, std::size_t workers = 1) const;

  // Pushes base draws through the inverse map. Deterministic for a seed.
  nn::Tensor<T> sample(std::size_t n, std::uint64_t seed) const;

  // Mean negative log-likelihood of the batch; grads is resized to match
  // parameters().
  double nll_and_gradient(const nn::Tensor<T>& batch, FlowGradients<T>& grads) const;

  std::vector<ParamView<T>> parameters();
  std::vector<ParamView<const T>> parameters() const;
  std::size_t parameter_count() const;

  // Replaces all trainable parameters with random values of the given scale.
  void randomize(std::uint64_t seed, double scale);

  static constexpr std::size_t kChunkRows = 256;

 private:
  struct Tape;

  void check_ready() const;
  void forward_rows(nn::Tensor<T>& x, std::vector<T>& logdet, Tape* tape) const;
  void inverse_rows(nn::Tensor<T>& z, std::vector<T>& logdet) const;

  FlowConfig config_;
  std::vector<FlowLayer<T>> layers_;
  bool actnorm_initialized_ = true;
};

template <Real T>
T standard_normal_log_density(std::span<const T> z);

}  // namespace fldplus::flow
