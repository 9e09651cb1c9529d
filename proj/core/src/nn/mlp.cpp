#include "fldplus/nn/mlp.hpp"

#include <Eigen/Core>

#include <cmath>
#include <string>

namespace fldplus::nn {

namespace {

template <Real T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <Real T>
using MatMap = Eigen::Map<RowMatrix<T>>;
template <Real T>
using ConstMatMap = Eigen::Map<const RowMatrix<T>>;
template <Real T>
using ConstVecMap = Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>;

template <Real T>
void apply_activation(Activation act, std::span<T> values) {
  switch (act) {
    case Activation::kRelu:
      for (auto& v : values) v = v > T{0} ? v : T{0};
      break;
    case Activation::kTanh:
      for (auto& v : values) v = std::tanh(v);
      break;
    case Activation::kIdentity:
      break;
  }
}

// grad *= act'(pre), elementwise.
template <Real T>
void activation_backward(Activation act, std::span<const T> pre, std::span<T> grad) {
  switch (act) {
    case Activation::kRelu:
      for (std::size_t i = 0; i < grad.size(); ++i) {
        if (!(pre[i] > T{0})) grad[i] = T{0};
      }
      break;
    case Activation::kTanh:
      for (std::size_t i = 0; i < grad.size(); ++i) {
        const T t = std::tanh(pre[i]);
        grad[i] *= T{1} - t * t;
      }
      break;
    case Activation::kIdentity:
      break;
  }
}

template <Real T>
Tensor<T> as_batch(const Tensor<T>& x, std::size_t in_dim) {
  if (x.cols() != in_dim) {
    fail(ErrorCode::kDimensionMismatch, "mlp input has last dim " + std::to_string(x.cols()) +
                                            ", expected " + std::to_string(in_dim));
  }
  if (x.rank() == 2) return x;
  Tensor<T> batch = x;
  batch.reshape({1, in_dim});
  return batch;
}

template <Real T>
Tensor<T> affine(const Dense<T>& layer, const Tensor<T>& input) {
  const auto rows = input.rows();
  Tensor<T> out = Tensor<T>::matrix(rows, layer.out_dim());
  ConstMatMap<T> x(input.data(), rows, layer.in_dim());
  ConstMatMap<T> w(layer.weight.data(), layer.out_dim(), layer.in_dim());
  ConstVecMap<T> b(layer.bias.data(), layer.out_dim());
  MatMap<T> y(out.data(), rows, layer.out_dim());
  y.noalias() = x * w.transpose();
  y.rowwise() += b;
  return out;
}

template <Real T>
Tensor<T> restore_rank(Tensor<T> y, const Tensor<T>& x) {
  if (x.rank() == 1) y.reshape({y.size()});
  return y;
}

template <Real T>
void check_finite_output(const Tensor<T>& y) {
  if (!y.all_finite()) fail(ErrorCode::kNonFinite, "mlp produced a non-finite output");
}

}  // namespace

std::string_view to_string(Activation a) noexcept {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
    case Activation::kIdentity: return "identity";
  }
  return "relu";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  if (name == "identity") return Activation::kIdentity;
  fail(ErrorCode::kInvalidArgument, "unknown activation '" + std::string(name) + "'");
}

template <Real T>
Mlp<T>::Mlp(std::size_t in_dim, std::span<const std::size_t> hidden, std::size_t out_dim,
            Activation activation)
    : activation_(activation) {
  std::size_t prev = in_dim;
  auto add = [&](std::size_t next) {
    layers_.push_back({Tensor<T>({next, prev}), Tensor<T>({next})});
    prev = next;
  };
  for (auto h : hidden) add(h);
  add(out_dim);
}

template <Real T>
Mlp<T>::Mlp(std::vector<Dense<T>> layers, Activation activation)
    : layers_(std::move(layers)), activation_(activation) {
  if (layers_.empty()) fail(ErrorCode::kInvalidArgument, "mlp needs at least one layer");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.weight.rank() != 2 || l.bias.rank() != 1 || l.bias.dim(0) != l.weight.dim(0)) {
      fail(ErrorCode::kDimensionMismatch, "layer " + std::to_string(i) + " is malformed");
    }
    if (i > 0 && layers_[i - 1].out_dim() != l.in_dim()) {
      fail(ErrorCode::kDimensionMismatch,
           "layer " + std::to_string(i) + " does not chain with its predecessor");
    }
  }
}

template <Real T>
std::size_t Mlp<T>::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

template <Real T>
std::vector<std::span<T>> Mlp<T>::parameter_spans() {
  ++version_;
  std::vector<std::span<T>> out;
  for (auto& l : layers_) {
    out.push_back(l.weight.values());
    out.push_back(l.bias.values());
  }
  return out;
}

template <Real T>
std::vector<std::span<const T>> Mlp<T>::parameter_spans() const {
  std::vector<std::span<const T>> out;
  for (const auto& l : layers_) {
    out.push_back(l.weight.values());
    out.push_back(l.bias.values());
  }
  return out;
}

template <Real T>
void Mlp<T>::init_uniform(std::mt19937_64& rng) {
  ++version_;
  for (auto& l : layers_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.in_dim()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& w : l.weight.storage()) w = static_cast<T>(dist(rng));
    for (auto& b : l.bias.storage()) b = static_cast<T>(dist(rng));
  }
}

template <Real T>
void Mlp<T>::zero_output_layer() {
  ++version_;
  auto& l = layers_.back();
  std::fill(l.weight.storage().begin(), l.weight.storage().end(), T{0});
  std::fill(l.bias.storage().begin(), l.bias.storage().end(), T{0});
}

template <Real T>
Tensor<T> mlp_infer(const Mlp<T>& net, const Tensor<T>& x) {
  Tensor<T> h = as_batch(x, net.in_dim());
  const auto& layers = net.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = affine(layers[i], h);
    if (i + 1 < layers.size()) apply_activation(net.activation(), h.values());
  }
  check_finite_output(h);
  return restore_rank(std::move(h), x);
}

template <Real T>
MlpForward<T> mlp_forward(const Mlp<T>& net, const Tensor<T>& x) {
  MlpForward<T> result;
  auto& cache = result.cache;
  cache.owner = &net;
  cache.version = net.version();
  Tensor<T> h = as_batch(x, net.in_dim());
  const auto& layers = net.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    cache.inputs.push_back(h);
    h = affine(layers[i], h);
    if (i + 1 < layers.size()) {
      cache.pre_activations.push_back(h);
      apply_activation(net.activation(), h.values());
    }
  }
  check_finite_output(h);
  result.output = restore_rank(std::move(h), x);
  return result;
}

template <Real T>
MlpBackward<T> mlp_backward(const Mlp<T>& net, const ActivationCache<T>& cache,
                            const Tensor<T>& grad_out) {
  const auto& layers = net.layers();
  if (cache.owner != &net || cache.version != net.version() ||
      cache.inputs.size() != layers.size() ||
      cache.pre_activations.size() + 1 != layers.size()) {
    fail(ErrorCode::kStaleCache, "activation cache does not belong to this network state");
  }
  const std::size_t rows = cache.inputs.front().rows();
  if (grad_out.size() != rows * net.out_dim()) {
    fail(ErrorCode::kDimensionMismatch, "grad_out shape does not match cached forward pass");
  }

  MlpBackward<T> result;
  result.params.weight.resize(layers.size());
  result.params.bias.resize(layers.size());

  Tensor<T> g = grad_out;
  g.reshape({rows, net.out_dim()});
  for (std::size_t li = layers.size(); li-- > 0;) {
    const auto& layer = layers[li];
    const auto& input = cache.inputs[li];
    ConstMatMap<T> gz(g.data(), rows, layer.out_dim());
    ConstMatMap<T> a(input.data(), rows, layer.in_dim());

    Tensor<T> dw({layer.out_dim(), layer.in_dim()});
    MatMap<T>(dw.data(), layer.out_dim(), layer.in_dim()).noalias() = gz.transpose() * a;
    Tensor<T> db({layer.out_dim()});
    Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(db.data(), layer.out_dim()) =
        gz.colwise().sum();

    Tensor<T> ga = Tensor<T>::matrix(rows, layer.in_dim());
    ConstMatMap<T> w(layer.weight.data(), layer.out_dim(), layer.in_dim());
    MatMap<T>(ga.data(), rows, layer.in_dim()).noalias() = gz * w;

    result.params.weight[li] = std::move(dw);
    result.params.bias[li] = std::move(db);
    if (li > 0) {
      activation_backward<T>(net.activation(), cache.pre_activations[li - 1].values(),
                             ga.values());
    }
    g = std::move(ga);
  }
  if (grad_out.rank() == 1) g.reshape({net.in_dim()});
  result.input = std::move(g);
  return result;
}

template class Mlp<float>;
template class Mlp<double>;
template Tensor<float> mlp_infer(const Mlp<float>&, const Tensor<float>&);
template Tensor<double> mlp_infer(const Mlp<double>&, const Tensor<double>&);
template MlpForward<float> mlp_forward(const Mlp<float>&, const Tensor<float>&);
template MlpForward<double> mlp_forward(const Mlp<double>&, const Tensor<double>&);
template MlpBackward<float> mlp_backward(const Mlp<float>&, const ActivationCache<float>&,
                                         const Tensor<float>&);
template MlpBackward<double> mlp_backward(const Mlp<double>&, const ActivationCache<double>&,
                                          const Tensor<double>&);

}  // namespace fldplus::nn
