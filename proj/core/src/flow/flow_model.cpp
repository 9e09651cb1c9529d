#include "fldplus/flow/flow_model.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include "fldplus/parallel.hpp"

namespace fldplus::flow {

using nn::Tensor;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr double kActNormEpsilon = 1e-6;

std::vector<std::uint32_t> index_range(std::size_t begin, std::size_t end) {
  std::vector<std::uint32_t> out(end - begin);
  std::iota(out.begin(), out.end(), static_cast<std::uint32_t>(begin));
  return out;
}

template <Real T>
Tensor<T> gather_columns(const Tensor<T>& x, const std::vector<std::uint32_t>& cols) {
  const std::size_t rows = x.rows();
  Tensor<T> out = Tensor<T>::matrix(rows, cols.size());
  for (std::size_t r = 0; r < rows; ++r) {
    auto src = x.row(r);
    auto dst = out.row(r);
    for (std::size_t c = 0; c < cols.size(); ++c) dst[c] = src[cols[c]];
  }
  return out;
}

template <Real T>
void check_finite(const Tensor<T>& x, const std::vector<T>& logdet, std::size_t layer) {
  bool ok = x.all_finite();
  for (T v : logdet) ok = ok && std::isfinite(v);
  if (!ok) {
    fail(ErrorCode::kNonFinite,
         "non-finite value produced by flow layer " + std::to_string(layer));
  }
}

template <Real T>
void actnorm_forward(const ActNormLayer<T>& l, Tensor<T>& x, std::vector<T>& logdet) {
  const std::size_t d = l.shift.size();
  std::vector<T> inv_scale(d);
  T ld = 0;
  for (std::size_t j = 0; j < d; ++j) {
    inv_scale[j] = std::exp(-l.log_scale[j]);
    ld -= l.log_scale[j];
  }
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    for (std::size_t j = 0; j < d; ++j) row[j] = (row[j] - l.shift[j]) * inv_scale[j];
    logdet[r] += ld;
  }
}

template <Real T>
void actnorm_inverse(const ActNormLayer<T>& l, Tensor<T>& y, std::vector<T>& logdet) {
  const std::size_t d = l.shift.size();
  std::vector<T> scale(d);
  T ld = 0;
  for (std::size_t j = 0; j < d; ++j) {
    scale[j] = std::exp(l.log_scale[j]);
    ld += l.log_scale[j];
  }
  for (std::size_t r = 0; r < y.rows(); ++r) {
    auto row = y.row(r);
    for (std::size_t j = 0; j < d; ++j) row[j] = row[j] * scale[j] + l.shift[j];
    logdet[r] += ld;
  }
}

template <Real T>
void permute_forward(const PermutationLayer& l, Tensor<T>& x) {
  std::vector<T> tmp(x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    for (std::size_t i = 0; i < tmp.size(); ++i) tmp[i] = row[l.forward[i]];
    std::copy(tmp.begin(), tmp.end(), row.begin());
  }
}

template <Real T>
void permute_inverse(const PermutationLayer& l, Tensor<T>& y) {
  std::vector<T> tmp(y.cols());
  for (std::size_t r = 0; r < y.rows(); ++r) {
    auto row = y.row(r);
    for (std::size_t i = 0; i < tmp.size(); ++i) tmp[l.forward[i]] = row[i];
    std::copy(tmp.begin(), tmp.end(), row.begin());
  }
}

template <Real T>
void coupling_apply(const CouplingLayer<T>& l, const FlowConfig& cfg, const Tensor<T>& raw,
                    Tensor<T>& x, std::vector<T>& logdet, Direction dir) {
  const std::size_t per = raw_params_per_coordinate(cfg.bins);
  const T bound = static_cast<T>(cfg.tail_bound);
  SplineKnots<T> knots;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    auto raw_row = raw.row(r);
    T ld = 0;
    for (std::size_t j = 0; j < l.transform.size(); ++j) {
      knots_from_raw<T>(raw_row.subspan(j * per, per), cfg.bins, bound, cfg.floors, knots);
      T& v = row[l.transform[j]];
      const auto out = dir == Direction::kForward ? spline_forward(knots, v)
                                                  : spline_inverse(knots, v);
      v = out.value;
      ld += out.log_abs_deriv;
    }
    logdet[r] += ld;
  }
}

}  // namespace

void FlowConfig::validate() const {
  if (input_dim == 0) fail(ErrorCode::kInvalidArgument, "flow input_dim must be positive");
  if (coupling_layers > 0 && input_dim < 2) {
    fail(ErrorCode::kInvalidArgument, "coupling layers need input_dim >= 2");
  }
  if (bins == 0) fail(ErrorCode::kInvalidArgument, "spline bins must be positive");
  if (!(tail_bound > 0)) fail(ErrorCode::kInvalidArgument, "tail bound must be positive");
  if (hidden_features == 0) fail(ErrorCode::kInvalidArgument, "hidden width must be positive");
}

PermutationLayer PermutationLayer::from_forward(std::vector<std::uint32_t> forward) {
  PermutationLayer p;
  p.inverse.assign(forward.size(), 0);
  std::vector<bool> seen(forward.size(), false);
  for (std::size_t i = 0; i < forward.size(); ++i) {
    if (forward[i] >= forward.size() || seen[forward[i]]) {
      fail(ErrorCode::kFormat, "permutation indices are not a bijection");
    }
    seen[forward[i]] = true;
    p.inverse[forward[i]] = static_cast<std::uint32_t>(i);
  }
  p.forward = std::move(forward);
  return p;
}

template <Real T>
struct FlowModel<T>::Tape {
  std::vector<Tensor<T>> inputs;
  std::vector<nn::ActivationCache<T>> conditioner;
  std::vector<Tensor<T>> raw;
};

template <Real T>
FlowModel<T>::FlowModel(const FlowConfig& config) : config_(config) {
  config_.validate();
  const std::size_t d = config_.input_dim;
  const std::size_t half = d / 2;
  std::mt19937_64 rng(config_.seed);
  const std::vector<std::size_t> hidden(config_.hidden_layers, config_.hidden_features);
  for (std::size_t i = 0; i < config_.coupling_layers; ++i) {
    layers_.emplace_back(ActNormLayer<T>{std::vector<T>(d, T{0}), std::vector<T>(d, T{0})});

    CouplingLayer<T> c;
    if (i % 2 == 0) {
      c.identity = index_range(0, half);
      c.transform = index_range(half, d);
    } else {
      c.transform = index_range(0, half);
      c.identity = index_range(half, d);
    }
    c.conditioner = nn::Mlp<T>(c.identity.size(), hidden,
                               c.transform.size() * raw_params_per_coordinate(config_.bins),
                               config_.activation);
    c.conditioner.init_uniform(rng);
    c.conditioner.zero_output_layer();
    layers_.emplace_back(std::move(c));

    if (i + 1 < config_.coupling_layers) {
      std::vector<std::uint32_t> perm = index_range(0, d);
      std::shuffle(perm.begin(), perm.end(), rng);
      layers_.emplace_back(PermutationLayer::from_forward(std::move(perm)));
    }
  }
  actnorm_initialized_ = config_.coupling_layers == 0;
}

template <Real T>
FlowModel<T> FlowModel<T>::base_only(std::size_t dim) {
  FlowConfig cfg;
  cfg.input_dim = dim;
  cfg.coupling_layers = 0;
  return FlowModel(cfg);
}

template <Real T>
FlowModel<T>::FlowModel(FlowConfig config, std::vector<FlowLayer<T>> layers,
                        bool actnorm_initialized)
    : config_(std::move(config)),
      layers_(std::move(layers)),
      actnorm_initialized_(actnorm_initialized) {
  config_.validate();
  const std::size_t d = config_.input_dim;
  const std::size_t per = raw_params_per_coordinate(config_.bins);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const bool ok = std::visit(
        Overloaded{
            [&](const ActNormLayer<T>& a) {
              return a.shift.size() == d && a.log_scale.size() == d;
            },
            [&](const PermutationLayer& p) { return p.forward.size() == d; },
            [&](const CouplingLayer<T>& c) {
              return c.identity.size() + c.transform.size() == d &&
                     c.conditioner.depth() > 0 &&
                     c.conditioner.in_dim() == c.identity.size() &&
                     c.conditioner.out_dim() == c.transform.size() * per;
            }},
        layers_[i]);
    if (!ok) {
      fail(ErrorCode::kDimensionMismatch,
           "flow layer " + std::to_string(i) + " does not match input_dim " + std::to_string(d));
    }
  }
}

template <Real T>
void FlowModel<T>::check_ready() const {
  if (!actnorm_initialized_) {
    fail(ErrorCode::kInvalidArgument, "flow actnorm layers have not been initialized");
  }
}

template <Real T>
void FlowModel<T>::forward_rows(Tensor<T>& x, std::vector<T>& logdet, Tape* tape) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (tape) tape->inputs.push_back(x);
    std::visit(Overloaded{
                   [&](const ActNormLayer<T>& a) { actnorm_forward(a, x, logdet); },
                   [&](const PermutationLayer& p) { permute_forward(p, x); },
                   [&](const CouplingLayer<T>& c) {
                     Tensor<T> cond = gather_columns(x, c.identity);
                     Tensor<T> raw;
                     if (tape) {
                       auto fwd = nn::mlp_forward(c.conditioner, cond);
                       raw = std::move(fwd.output);
                       tape->conditioner.push_back(std::move(fwd.cache));
                     } else {
                       raw = nn::mlp_infer(c.conditioner, cond);
                     }
                     coupling_apply(c, config_, raw, x, logdet, Direction::kForward);
                     if (tape) tape->raw.push_back(std::move(raw));
                   }},
               layers_[i]);
    check_finite(x, logdet, i);
  }
}

template <Real T>
void FlowModel<T>::inverse_rows(Tensor<T>& z, std::vector<T>& logdet) const {
  for (std::size_t i = layers_.size(); i-- > 0;) {
    std::visit(Overloaded{
                   [&](const ActNormLayer<T>& a) { actnorm_inverse(a, z, logdet); },
                   [&](const PermutationLayer& p) { permute_inverse(p, z); },
                   [&](const CouplingLayer<T>& c) {
                     const Tensor<T> raw =
                         nn::mlp_infer(c.conditioner, gather_columns(z, c.identity));
                     coupling_apply(c, config_, raw, z, logdet, Direction::kInverse);
                   }},
               layers_[i]);
    check_finite(z, logdet, i);
  }
}

template <Real T>
void FlowModel<T>::initialize_actnorm(const Tensor<T>& batch) {
  if (batch.rank() != 2 || batch.cols() != dim()) {
    fail(ErrorCode::kDimensionMismatch, "actnorm init batch must be (n x " +
                                            std::to_string(dim()) + ")");
  }
  const std::size_t n = batch.rows();
  if (n < 2) fail(ErrorCode::kInsufficientData, "actnorm init needs at least 2 samples");
  Tensor<T> x = batch;
  std::vector<T> logdet(n, T{0});
  std::size_t zero_variance = 0;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (auto* a = std::get_if<ActNormLayer<T>>(&layers_[i])) {
      for (std::size_t j = 0; j < dim(); ++j) {
        double mean = 0;
        for (std::size_t r = 0; r < n; ++r) mean += x(r, j);
        mean /= static_cast<double>(n);
        double var = 0;
        for (std::size_t r = 0; r < n; ++r) {
          const double dlt = x(r, j) - mean;
          var += dlt * dlt;
        }
        var /= static_cast<double>(n);
        if (var == 0.0) ++zero_variance;
        a->shift[j] = static_cast<T>(mean);
        a->log_scale[j] = static_cast<T>(std::log(std::sqrt(var) + kActNormEpsilon));
      }
    }
    std::visit(Overloaded{
                   [&](const ActNormLayer<T>& a) { actnorm_forward(a, x, logdet); },
                   [&](const PermutationLayer& p) { permute_forward(p, x); },
                   [&](const CouplingLayer<T>& c) {
                     const Tensor<T> raw =
                         nn::mlp_infer(c.conditioner, gather_columns(x, c.identity));
                     coupling_apply(c, config_, raw, x, logdet, Direction::kForward);
                   }},
               layers_[i]);
    check_finite(x, logdet, i);
  }
  if (zero_variance > 0) {
    spdlog::warn("actnorm init: {} zero-variance dimension(s); scale floored at {}",
                 zero_variance, kActNormEpsilon);
  }
  actnorm_initialized_ = true;
}

template <Real T>
Transformed<T> FlowModel<T>::forward(std::span<const T> x) const {
  check_ready();
  if (x.size() != dim()) {
    fail(ErrorCode::kDimensionMismatch, "flow input has dim " + std::to_string(x.size()) +
                                            ", expected " + std::to_string(dim()));
  }
  Tensor<T> rows = Tensor<T>::from_rows(1, dim(), std::vector<T>(x.begin(), x.end()));
  std::vector<T> logdet(1, T{0});
  forward_rows(rows, logdet, nullptr);
  return {std::move(rows.storage()), logdet[0]};
}

template <Real T>
Transformed<T> FlowModel<T>::inverse(std::span<const T> z) const {
  check_ready();
  if (z.size() != dim()) fail(ErrorCode::kDimensionMismatch, "flow inverse dim mismatch");
  Tensor<T> rows = Tensor<T>::from_rows(1, dim(), std::vector<T>(z.begin(), z.end()));
  std::vector<T> logdet(1, T{0});
  inverse_rows(rows, logdet);
  return {std::move(rows.storage()), logdet[0]};
}

template <Real T>
T standard_normal_log_density(std::span<const T> z) {
  const double log_two_pi = std::log(2.0 * std::numbers::pi);
  double sq = 0;
  for (T v : z) sq += static_cast<double>(v) * static_cast<double>(v);
  return static_cast<T>(-0.5 * sq - 0.5 * static_cast<double>(z.size()) * log_two_pi);
}

template <Real T>
T FlowModel<T>::log_prob(std::span<const T> x) const {
  const auto out = forward(x);
  return standard_normal_log_density<T>(out.value) + out.logdet;
}

template <Real T>
std::vector<T> FlowModel<T>::log_prob_batch(const Tensor<T>& batch, std::size_t workers) const {
  check_ready();
  if (batch.rank() != 2 || batch.cols() != dim()) {
    fail(ErrorCode::kDimensionMismatch, "log_prob_batch expects (n x " +
                                            std::to_string(dim()) + ")");
  }
  const std::size_t n = batch.rows();
  std::vector<T> out(n);
  const std::size_t chunks = (n + kChunkRows - 1) / kChunkRows;
  parallel_for(chunks, workers, [&](std::size_t c) {
    const std::size_t begin = c * kChunkRows;
    const std::size_t rows = std::min(kChunkRows, n - begin);
    Tensor<T> x = Tensor<T>::from_rows(
        rows, dim(),
        std::vector<T>(batch.data() + begin * dim(), batch.data() + (begin + rows) * dim()));
    std::vector<T> logdet(rows, T{0});
    forward_rows(x, logdet, nullptr);
    for (std::size_t r = 0; r < rows; ++r) {
      out[begin + r] = standard_normal_log_density<T>(x.row(r)) + logdet[r];
    }
  });
  return out;
}

template <Real T>
Tensor<T> FlowModel<T>::sample(std::size_t n, std::uint64_t seed) const {
  check_ready();
  if (n == 0) fail(ErrorCode::kInvalidArgument, "sample count must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor<T> z = Tensor<T>::matrix(n, dim());
  for (auto& v : z.storage()) v = static_cast<T>(normal(rng));
  std::vector<T> logdet(n, T{0});
  inverse_rows(z, logdet);
  return z;
}

template <Real T>
double FlowModel<T>::nll_and_gradient(const Tensor<T>& batch, FlowGradients<T>& grads) const {
  check_ready();
  if (batch.rank() != 2 || batch.cols() != dim()) {
    fail(ErrorCode::kDimensionMismatch, "training batch has the wrong shape");
  }
  const std::size_t n = batch.rows();
  const std::size_t d = dim();
  Tape tape;
  Tensor<T> x = batch;
  std::vector<T> logdet(n, T{0});
  forward_rows(x, logdet, &tape);

  double nll = 0;
  for (std::size_t r = 0; r < n; ++r) {
    nll -= static_cast<double>(standard_normal_log_density<T>(x.row(r))) +
           static_cast<double>(logdet[r]);
  }
  nll /= static_cast<double>(n);

  // Loss = -(1/n) sum_r [log N(z_r) + logdet_r]
  const T inv_n = T{1} / static_cast<T>(n);
  Tensor<T> g = x;
  for (auto& v : g.storage()) v *= inv_n;
  const T g_logdet = -inv_n;

  // Parameter gradients in parameters() order; walk layers backwards.
  std::vector<std::vector<std::vector<T>>> per_layer(layers_.size());
  std::size_t coupling_index = 0;
  for (const auto& l : layers_) {
    if (std::holds_alternative<CouplingLayer<T>>(l)) ++coupling_index;
  }
  const std::size_t per = raw_params_per_coordinate(config_.bins);
  const T bound = static_cast<T>(config_.tail_bound);
  SplineKnots<T> knots;

  for (std::size_t i = layers_.size(); i-- > 0;) {
    const Tensor<T>& input = tape.inputs[i];
    std::visit(
        Overloaded{
            [&](const ActNormLayer<T>& a) {
              std::vector<T> g_shift(d, T{0});
              std::vector<T> g_log_scale(d, T{0});
              for (std::size_t j = 0; j < d; ++j) {
                const T inv_scale = std::exp(-a.log_scale[j]);
                T gs = 0;
                T gl = 0;
                for (std::size_t r = 0; r < n; ++r) {
                  const T y = (input(r, j) - a.shift[j]) * inv_scale;
                  const T gy = g(r, j);
                  gl -= gy * y;
                  gs -= gy * inv_scale;
                  g(r, j) = gy * inv_scale;
                }
                g_shift[j] = gs;
                g_log_scale[j] = gl - static_cast<T>(n) * g_logdet;
              }
              per_layer[i].push_back(std::move(g_shift));
              per_layer[i].push_back(std::move(g_log_scale));
            },
            [&](const PermutationLayer& p) {
              Tensor<T> gx = Tensor<T>::matrix(n, d);
              for (std::size_t r = 0; r < n; ++r) {
                auto src = g.row(r);
                auto dst = gx.row(r);
                for (std::size_t k = 0; k < d; ++k) dst[p.forward[k]] = src[k];
              }
              g = std::move(gx);
            },
            [&](const CouplingLayer<T>& c) {
              --coupling_index;
              const Tensor<T>& raw = tape.raw[coupling_index];
              Tensor<T> g_raw = Tensor<T>::matrix(n, raw.cols());
              for (std::size_t r = 0; r < n; ++r) {
                auto raw_row = raw.row(r);
                auto g_raw_row = g_raw.row(r);
                auto g_row = g.row(r);
                for (std::size_t j = 0; j < c.transform.size(); ++j) {
                  const auto col = c.transform[j];
                  knots_from_raw<T>(raw_row.subspan(j * per, per), config_.bins, bound,
                                    config_.floors, knots);
                  g_row[col] = spline_backward<T>(knots, input(r, col), g_row[col], g_logdet,
                                                  g_raw_row.subspan(j * per, per));
                }
              }
              auto back =
                  nn::mlp_backward(c.conditioner, tape.conditioner[coupling_index], g_raw);
              for (std::size_t r = 0; r < n; ++r) {
                auto g_row = g.row(r);
                for (std::size_t k = 0; k < c.identity.size(); ++k) {
                  g_row[c.identity[k]] += back.input(r, k);
                }
              }
              for (std::size_t li = 0; li < c.conditioner.depth(); ++li) {
                per_layer[i].push_back(std::move(back.params.weight[li].storage()));
                per_layer[i].push_back(std::move(back.params.bias[li].storage()));
              }
            }},
        layers_[i]);
  }

  grads.clear();
  for (auto& layer_grads : per_layer) {
    for (auto& v : layer_grads) grads.push_back(std::move(v));
  }
  return nll;
}

template <Real T>
std::vector<ParamView<T>> FlowModel<T>::parameters() {
  std::vector<ParamView<T>> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const std::string prefix = "layers." + std::to_string(i) + ".";
    std::visit(Overloaded{
                   [&](ActNormLayer<T>& a) {
                     out.push_back({prefix + "shift", {a.shift.size()}, a.shift});
                     out.push_back({prefix + "log_scale", {a.log_scale.size()}, a.log_scale});
                   },
                   [&](PermutationLayer&) {},
                   [&](CouplingLayer<T>& c) {
                     auto spans = c.conditioner.parameter_spans();
                     const auto& dense = c.conditioner.layers();
                     for (std::size_t li = 0; li < dense.size(); ++li) {
                       const std::string base = prefix + "net." + std::to_string(li) + ".";
                       out.push_back({base + "weight", dense[li].weight.dims(), spans[2 * li]});
                       out.push_back({base + "bias", dense[li].bias.dims(), spans[2 * li + 1]});
                     }
                   }},
               layers_[i]);
  }
  return out;
}

template <Real T>
std::vector<ParamView<const T>> FlowModel<T>::parameters() const {
  std::vector<ParamView<const T>> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const std::string prefix = "layers." + std::to_string(i) + ".";
    std::visit(Overloaded{
                   [&](const ActNormLayer<T>& a) {
                     out.push_back({prefix + "shift", {a.shift.size()}, a.shift});
                     out.push_back({prefix + "log_scale", {a.log_scale.size()}, a.log_scale});
                   },
                   [&](const PermutationLayer&) {},
                   [&](const CouplingLayer<T>& c) {
                     auto spans = c.conditioner.parameter_spans();
                     const auto& dense = c.conditioner.layers();
                     for (std::size_t li = 0; li < dense.size(); ++li) {
                       const std::string base = prefix + "net." + std::to_string(li) + ".";
                       out.push_back({base + "weight", dense[li].weight.dims(), spans[2 * li]});
                       out.push_back({base + "bias", dense[li].bias.dims(), spans[2 * li + 1]});
                     }
                   }},
               layers_[i]);
  }
  return out;
}

template <Real T>
std::size_t FlowModel<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters()) n += p.values.size();
  return n;
}

template <Real T>
void FlowModel<T>::randomize(std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  for (auto& l : layers_) {
    if (auto* a = std::get_if<ActNormLayer<T>>(&l)) {
      for (auto& v : a->shift) v = static_cast<T>(normal(rng));
      for (auto& v : a->log_scale) v = static_cast<T>(0.5 * normal(rng));
    } else if (auto* c = std::get_if<CouplingLayer<T>>(&l)) {
      c->conditioner.init_uniform(rng);
      auto& out = c->conditioner.mutable_layer(c->conditioner.depth() - 1);
      for (auto& v : out.weight.storage()) v = static_cast<T>(v * scale);
      for (auto& v : out.bias.storage()) v = static_cast<T>(normal(rng));
    }
  }
  actnorm_initialized_ = true;
}

template class FlowModel<float>;
template class FlowModel<double>;
template float standard_normal_log_density(std::span<const float>);
template double standard_normal_log_density(std::span<const double>);

}  // namespace fldplus::flow
