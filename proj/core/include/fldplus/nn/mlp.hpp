#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "fldplus/nn/tensor.hpp"

namespace fldplus::nn {

enum class Activation { kRelu, kTanh, kIdentity };

std::string_view to_string(Activation a) noexcept;
Activation parse_activation(std::string_view name);

// One affine map y = W x + b with W stored (out x in), row-major.
template <Real T>
struct Dense {
  Tensor<T> weight;
  Tensor<T> bias;

  std::size_t in_dim() const { return weight.dim(1); }
  std::size_t out_dim() const { return weight.dim(0); }
};

// Feed-forward network: hidden layers use `activation`, the output layer is
// affine. Mutable access bumps a version counter so activation caches taken
// before an update are rejected by mlp_backward.
template <Real T>
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::size_t in_dim, std::span<const std::size_t> hidden, std::size_t out_dim,
      Activation activation = Activation::kRelu);
  Mlp(std::vector<Dense<T>> layers, Activation activation);

  std::size_t in_dim() const noexcept { return layers_.front().in_dim(); }
  std::size_t out_dim() const noexcept { return layers_.back().out_dim(); }
  std::size_t depth() const noexcept { return layers_.size(); }
  Activation activation() const noexcept { return activation_; }
  std::uint64_t version() const noexcept { return version_; }
  std::size_t parameter_count() const noexcept;

  const std::vector<Dense<T>>& layers() const noexcept { return layers_; }
  Dense<T>& mutable_layer(std::size_t i) {
    ++version_;
    return layers_.at(i);
  }

  // Parameter views in order w0, b0, w1, b1, ...
  std::vector<std::span<T>> parameter_spans();
  std::vector<std::span<const T>> parameter_spans() const;

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  void init_uniform(std::mt19937_64& rng);
  void zero_output_layer();

 private:
  std::vector<Dense<T>> layers_;
  Activation activation_ = Activation::kRelu;
  std::uint64_t version_ = 0;
};

template <Real T>
struct ActivationCache {
  const Mlp<T>* owner = nullptr;
  std::uint64_t version = 0;
  std::vector<Tensor<T>> inputs;           // input of each dense layer (rows x in_l)
  std::vector<Tensor<T>> pre_activations;  // affine output of each hidden layer
};

template <Real T>
struct MlpGradients {
  std::vector<Tensor<T>> weight;
  std::vector<Tensor<T>> bias;
};

template <Real T>
struct MlpForward {
  Tensor<T> output;
  ActivationCache<T> cache;
};

template <Real T>
struct MlpBackward {
  MlpGradients<T> params;
  Tensor<T> input;
};

// x is a rank-1 input vector or a (rows x in_dim) batch.
template <Real T>
Tensor<T> mlp_infer(const Mlp<T>& net, const Tensor<T>& x);

template <Real T>
MlpForward<T> mlp_forward(const Mlp<T>& net, const Tensor<T>& x);

template <Real T>
MlpBackward<T> mlp_backward(const Mlp<T>& net, const ActivationCache<T>& cache,
                            const Tensor<T>& grad_out);

}  // namespace fldplus::nn
