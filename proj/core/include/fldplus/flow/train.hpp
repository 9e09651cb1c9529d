#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fldplus/flow/flow_model.hpp"

namespace fldplus::flow {

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 256;
  double lr = 1e-4;
  std::uint64_t seed = 0;
  double validation_fraction = 0.1;
  std::size_t patience = 10;
  double clip_norm = 5.0;
  // Rows of the training split used for the data-dependent actnorm init.
  std::size_t actnorm_init_rows = 4096;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_nll = 0;
  double val_nll = 0;
  double grad_norm = 0;  // mean pre-clip gradient norm over the epoch
  std::size_t skipped_steps = 0;
};

template <Real T>
struct TrainResult {
  FlowModel<T> model;  // best-validation snapshot
  std::vector<EpochRecord> history;
  double initial_val_nll = 0;
  double best_val_nll = 0;
  std::size_t best_epoch = 0;  // 0 = the initialized model
  std::size_t train_rows = 0;
  std::size_t val_rows = 0;
  std::string stop_reason;  // "epochs", "early_stop", "diverged"
};

// Splits rows into train/validation (seeded), initializes actnorm on the
// training split, then runs Adam on the mean NLL. Divergence stops training
// and returns the best snapshot seen so far.
template <Real T>
TrainResult<T> train_flow(FlowModel<T> model, const nn::Tensor<T>& features,
                          const TrainConfig& config,
                          const std::function<void(const EpochRecord&)>& on_epoch = {});

std::string training_log_csv(const std::vector<EpochRecord>& history, double initial_val_nll);

}  // namespace fldplus::flow
