#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fldplus/features/feature_set.hpp"
#include "fldplus/flow/flow_model.hpp"

namespace fldplus::metric {

// Statistics of per-sample log-likelihoods. std_error uses the unbiased
// sample variance: sqrt(s^2 / n), and is 0 for a single sample.
struct LogLikelihoodSummary {
  std::size_t count = 0;
  double mean = 0;
  double std_error = 0;
  double min = 0;
  double max = 0;
};

// Compensated summation in index order.
LogLikelihoodSummary summarize_values(std::span<const double> values);

template <nn::Real T>
std::vector<double> log_likelihoods(const flow::FlowModel<T>& model,
                                    const features::FeatureSet& set, std::size_t workers = 1);

template <nn::Real T>
LogLikelihoodSummary summarize_ll(const flow::FlowModel<T>& model, const features::FeatureSet& set,
                                  std::size_t workers = 1);

// exp(gen.mean / real.mean). Requires real.mean < 0.
double fld_plus(const LogLikelihoodSummary& real, const LogLikelihoodSummary& gen);

// First-order propagation of the generated-set standard error:
// (gen.std_error / |real.mean|) * FLD+.
double fld_plus_std_error(const LogLikelihoodSummary& real, const LogLikelihoodSummary& gen);

}  // namespace fldplus::metric
