#include "fldplus/flow/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "fldplus/hash.hpp"
#include "fldplus/nn/adam.hpp"

namespace fldplus::flow {

using nn::Tensor;

namespace {

template <Real T>
Tensor<T> gather_rows(const Tensor<T>& x, std::span<const std::size_t> idx) {
  const std::size_t d = x.cols();
  Tensor<T> out = Tensor<T>::matrix(idx.size(), d);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    auto src = x.row(idx[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

template <Real T>
bool all_rows_identical(const Tensor<T>& x) {
  auto first = x.row(0);
  for (std::size_t r = 1; r < x.rows(); ++r) {
    auto row = x.row(r);
    if (!std::equal(first.begin(), first.end(), row.begin())) return false;
  }
  return true;
}

template <Real T>
double mean_nll(const FlowModel<T>& model, const Tensor<T>& x) {
  const auto lp = model.log_prob_batch(x, 1);
  double s = 0;
  for (T v : lp) s -= static_cast<double>(v);
  return s / static_cast<double>(lp.size());
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size == 0) fail(ErrorCode::kInvalidArgument, "batch_size must be positive");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    fail(ErrorCode::kInvalidArgument, "validation_fraction must lie in (0, 1)");
  }
  if (!(lr > 0.0) || !std::isfinite(lr)) fail(ErrorCode::kInvalidArgument, "lr must be positive");
  if (!(clip_norm > 0.0)) fail(ErrorCode::kInvalidArgument, "clip_norm must be positive");
  if (actnorm_init_rows < 2) fail(ErrorCode::kInvalidArgument, "actnorm_init_rows must be >= 2");
}

template <Real T>
TrainResult<T> train_flow(FlowModel<T> model, const Tensor<T>& features,
                          const TrainConfig& config,
                          const std::function<void(const EpochRecord&)>& on_epoch) {
  config.validate();
  if (features.rank() != 2 || features.cols() != model.dim()) {
    fail(ErrorCode::kDimensionMismatch,
         fmt::format("training features must be (n x {}), got {}", model.dim(),
                     nn::shape_string(features)));
  }
  const std::size_t n = features.rows();
  if (n < 2 * config.batch_size) {
    fail(ErrorCode::kInsufficientData,
         fmt::format("training needs at least 2*batch_size = {} samples, got {}",
                     2 * config.batch_size, n));
  }
  if (!features.all_finite()) fail(ErrorCode::kNonFinite, "training features contain non-finite values");
  if (all_rows_identical(features)) {
    fail(ErrorCode::kDegenerateInput,
         "all training features are identical; the likelihood is unbounded");
  }

  std::mt19937_64 rng(derive_seed(config.seed, "train"));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  const auto val_rows = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(config.validation_fraction * static_cast<double>(n))),
      1, n - 2);
  std::vector<std::size_t> val_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(val_rows));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(val_rows), order.end());
  const Tensor<T> val = gather_rows(features, std::span<const std::size_t>(val_idx));

  if (!model.actnorm_initialized()) {
    const std::size_t m = std::min(config.actnorm_init_rows, train_idx.size());
    model.initialize_actnorm(gather_rows(features, std::span<const std::size_t>(train_idx).first(m)));
  }

  TrainResult<T> result;
  result.train_rows = train_idx.size();
  result.val_rows = val_rows;
  result.initial_val_nll = mean_nll(model, val);
  result.best_val_nll = result.initial_val_nll;
  result.model = model;
  result.stop_reason = "epochs";

  std::vector<std::size_t> sizes;
  for (const auto& p : model.parameters()) sizes.push_back(p.values.size());
  nn::AdamState<T> adam(nn::AdamOptions{.lr = config.lr}, sizes);
  FlowGradients<T> grads;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(train_idx.begin(), train_idx.end(), rng);
    EpochRecord rec;
    rec.epoch = epoch;
    double nll_sum = 0;
    double norm_sum = 0;
    std::size_t steps = 0;
    bool diverged = false;
    for (std::size_t begin = 0; begin < train_idx.size(); begin += config.batch_size) {
      const std::size_t rows = std::min(config.batch_size, train_idx.size() - begin);
      if (rows < 2) break;
      const Tensor<T> batch =
          gather_rows(features, std::span<const std::size_t>(train_idx).subspan(begin, rows));
      double nll = 0;
      try {
        nll = model.nll_and_gradient(batch, grads);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNonFinite) throw;
        diverged = true;
        break;
      }
      if (!std::isfinite(nll)) {
        diverged = true;
        break;
      }
      std::vector<std::span<T>> gspans(grads.begin(), grads.end());
      const double norm = nn::clip_global_norm<T>(gspans, config.clip_norm);
      auto params = model.parameters();
      std::vector<std::span<T>> pspans;
      pspans.reserve(params.size());
      for (auto& p : params) pspans.push_back(p.values);
      std::vector<std::span<const T>> cgrads(grads.begin(), grads.end());
      const auto report = nn::adam_step<T>(pspans, cgrads, adam);
      if (!report.applied) ++rec.skipped_steps;
      nll_sum += nll * static_cast<double>(rows);
      norm_sum += std::isfinite(norm) ? norm : 0.0;
      steps += rows;
    }
    if (!diverged) {
      try {
        rec.val_nll = mean_nll(model, val);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNonFinite) throw;
        diverged = true;
      }
      diverged = diverged || !std::isfinite(rec.val_nll);
    }
    if (diverged) {
      result.stop_reason = "diverged";
      break;
    }
    rec.train_nll = nll_sum / static_cast<double>(std::max<std::size_t>(steps, 1));
    const std::size_t batches = (train_idx.size() + config.batch_size - 1) / config.batch_size;
    rec.grad_norm = norm_sum / static_cast<double>(batches);
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.val_nll < result.best_val_nll) {
      result.best_val_nll = rec.val_nll;
      result.best_epoch = epoch;
      result.model = model;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      result.stop_reason = "early_stop";
      break;
    }
  }
  return result;
}

std::string training_log_csv(const std::vector<EpochRecord>& history, double initial_val_nll) {
  std::string out = "epoch,train_nll,val_nll,grad_norm,skipped_steps\n";
  out += fmt::format("0,,{:.17g},,0\n", initial_val_nll);
  for (const auto& r : history) {
    out += fmt::format("{},{:.17g},{:.17g},{:.17g},{}\n", r.epoch, r.train_nll, r.val_nll,
                       r.grad_norm, r.skipped_steps);
  }
  return out;
}

template TrainResult<float> train_flow(FlowModel<float>, const Tensor<float>&, const TrainConfig&,
                                       const std::function<void(const EpochRecord&)>&);
template TrainResult<double> train_flow(FlowModel<double>, const Tensor<double>&,
                                        const TrainConfig&,
                                        const std::function<void(const EpochRecord&)>&);

}  // namespace fldplus::flow
