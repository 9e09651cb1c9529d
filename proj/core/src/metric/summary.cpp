#include "fldplus/metric/summary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fldplus/error.hpp"

namespace fldplus::metric {

namespace {

struct Neumaier {
  double sum = 0;
  double c = 0;
  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      c += (sum - t) + v;
    } else {
      c += (v - t) + sum;
    }
    sum = t;
  }
  double value() const { return sum + c; }
};

}  // namespace

LogLikelihoodSummary summarize_values(std::span<const double> values) {
  if (values.empty()) fail(ErrorCode::kInsufficientData, "cannot summarize an empty set");
  LogLikelihoodSummary s;
  s.count = values.size();
  s.min = std::numeric_limits<double>::infinity();
  s.max = -std::numeric_limits<double>::infinity();
  Neumaier total;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (!std::isfinite(v)) {
      fail(ErrorCode::kNonFinite, "non-finite log-likelihood at sample " + std::to_string(i));
    }
    total.add(v);
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
  }
  s.mean = total.value() / static_cast<double>(s.count);
  // rounding can put the mean a hair outside [min, max] for near-constant input
  s.mean = std::clamp(s.mean, s.min, s.max);
  if (s.count > 1) {
    Neumaier sq;
    for (double v : values) sq.add((v - s.mean) * (v - s.mean));
    const double var = sq.value() / static_cast<double>(s.count - 1);
    s.std_error = std::sqrt(var / static_cast<double>(s.count));
  }
  return s;
}

template <nn::Real T>
std::vector<double> log_likelihoods(const flow::FlowModel<T>& model,
                                    const features::FeatureSet& set, std::size_t workers) {
  if (set.count() == 0) fail(ErrorCode::kInsufficientData, "feature set is empty");
  if (set.dim != model.dim()) {
    fail(ErrorCode::kDimensionMismatch, "features have dim " + std::to_string(set.dim) +
                                            " but the model expects " + std::to_string(model.dim()));
  }
  const auto batch = set.as_tensor<T>();
  std::vector<T> ll;
  try {
    ll = model.log_prob_batch(batch, workers);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNonFinite) throw;
    // locate the first offending sample
    for (std::size_t i = 0; i < set.count(); ++i) {
      try {
        model.log_prob(batch.row(i));
      } catch (const Error& inner) {
        fail(ErrorCode::kNonFinite, "sample " + std::to_string(i) + ": " + inner.what());
      }
    }
    throw;
  }
  std::vector<double> out(ll.begin(), ll.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!std::isfinite(out[i])) {
      fail(ErrorCode::kNonFinite, "non-finite log-likelihood at sample " + std::to_string(i));
    }
  }
  return out;
}

template <nn::Real T>
LogLikelihoodSummary summarize_ll(const flow::FlowModel<T>& model, const features::FeatureSet& set,
                                  std::size_t workers) {
  const auto ll = log_likelihoods(model, set, workers);
  return summarize_values(ll);
}

template std::vector<double> log_likelihoods(const flow::FlowModel<float>&,
                                             const features::FeatureSet&, std::size_t);
template std::vector<double> log_likelihoods(const flow::FlowModel<double>&,
                                             const features::FeatureSet&, std::size_t);
template LogLikelihoodSummary summarize_ll(const flow::FlowModel<float>&,
                                           const features::FeatureSet&, std::size_t);
template LogLikelihoodSummary summarize_ll(const flow::FlowModel<double>&,
                                           const features::FeatureSet&, std::size_t);

double fld_plus(const LogLikelihoodSummary& real, const LogLikelihoodSummary& gen) {
  if (!std::isfinite(real.mean) || !std::isfinite(gen.mean)) {
    fail(ErrorCode::kNonFinite, "FLD+ needs finite mean log-likelihoods");
  }
  if (std::abs(real.mean) < 1e-12) {
    fail(ErrorCode::kUndefinedMetric,
         "real mean log-likelihood is zero; the FLD+ ratio is undefined");
  }
  if (real.mean > 0) {
    fail(ErrorCode::kUndefinedMetric,
         "real mean log-likelihood is positive (" + std::to_string(real.mean) +
             "); FLD+ assumes negative log-likelihoods, where generated samples score lower "
             "(more negative) than real ones. Rescale the features or use a model with "
             "negative average log-density.");
  }
  return std::exp(gen.mean / real.mean);
}

double fld_plus_std_error(const LogLikelihoodSummary& real, const LogLikelihoodSummary& gen) {
  return gen.std_error / std::abs(real.mean) * fld_plus(real, gen);
}

}  // namespace fldplus::metric
