#pragma once

#include <cstddef>
#include <string>

#include "fldplus/metric/report.hpp"
#include "fldplus/metric/summary.hpp"

namespace fldplus::experiments {

// What a trained checkpoint remembers about its real set: enough to score a
// generated set without the real cache, and to refuse mismatched features.
struct ModelCard {
  metric::LogLikelihoodSummary real_summary;
  metric::FeatureSummary real_features;
  std::string real_cache_sha256;
  std::string train_config_json;  // canonical JSON of the training command
  std::size_t best_epoch = 0;
  std::string stop_reason;

  std::string to_json() const;
  // kFormat if the JSON lacks the card (e.g. a checkpoint written by a bare
  // save_flow call) or a field has the wrong type.
  static ModelCard parse(const std::string& metadata_json);

  // kInvalidArgument when the features do not come from the same backbone,
  // pooling and dimension as the training set.
  void check_compatible(const metric::FeatureSummary& features, const std::string& label) const;
};

}  // namespace fldplus::experiments
