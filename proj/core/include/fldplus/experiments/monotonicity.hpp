#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fldplus/distortions/distortions.hpp"
#include "fldplus/features/backbone.hpp"
#include "fldplus/features/feature_map.hpp"
#include "fldplus/flow/flow_model.hpp"
#include "fldplus/metric/summary.hpp"

namespace fldplus::experiments {

struct MonotonicityConfig {
  distortions::Kind kind = distortions::Kind::kGaussianNoise;
  std::vector<double> levels;
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  features::PoolKind pool = features::PoolKind::kAverage;
  std::size_t workers = 1;

  void validate() const;
};

struct MonotonicityRow {
  double level = 0;
  std::vector<double> fld_plus;                        // one per seed
  std::vector<metric::LogLikelihoodSummary> gen;       // one per seed
  double mean_fld_plus = 0;
  double std_fld_plus = 0;  // sample std over seeds
};

struct MonotonicityResult {
  distortions::Kind kind = distortions::Kind::kGaussianNoise;
  std::vector<MonotonicityRow> rows;

  bool strictly_increasing() const;  // on mean_fld_plus
  // Mean of consecutive differences of mean_fld_plus.
  double mean_increment() const;
};

// Distorts every image in memory (no 8-bit round trip, so tiny levels are not
// rounded away), extracts features and scores them against the real summary.
// Image i under seed s uses distortions::image_seed(s, names[i]), the same
// stream a file sweep would use, so levels are nested per seed.
template <nn::Real T>
MonotonicityResult run_monotonicity(const flow::FlowModel<T>& model,
                                    const metric::LogLikelihoodSummary& real,
                                    const features::Backbone& backbone,
                                    const std::vector<features::Image>& images,
                                    const std::vector<std::string>& names,
                                    const MonotonicityConfig& config);

}  // namespace fldplus::experiments
