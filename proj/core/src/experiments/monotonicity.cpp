#include "fldplus/experiments/monotonicity.hpp"

#include <fmt/format.h>

#include <cmath>

#include "fldplus/error.hpp"
#include "fldplus/features/pipeline.hpp"
#include "fldplus/parallel.hpp"

namespace fldplus::experiments {

void MonotonicityConfig::validate() const {
  require(!levels.empty(), ErrorCode::kInvalidArgument, "monotonicity needs at least one level");
  for (double level : levels) distortions::validate_level(kind, level);
  require(!seeds.empty(), ErrorCode::kInvalidArgument, "monotonicity needs at least one seed");
}

bool MonotonicityResult::strictly_increasing() const {
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (!(rows[i].mean_fld_plus > rows[i - 1].mean_fld_plus)) return false;
  }
  return true;
}

double MonotonicityResult::mean_increment() const {
  if (rows.size() < 2) return 0;
  return (rows.back().mean_fld_plus - rows.front().mean_fld_plus) / static_cast<double>(rows.size() - 1);
}

template <nn::Real T>
MonotonicityResult run_monotonicity(const flow::FlowModel<T>& model,
                                    const metric::LogLikelihoodSummary& real,
                                    const features::Backbone& backbone,
                                    const std::vector<features::Image>& images,
                                    const std::vector<std::string>& names,
                                    const MonotonicityConfig& config) {
  config.validate();
  require(!images.empty(), ErrorCode::kInsufficientData, "monotonicity needs images");
  require(names.size() == images.size(), ErrorCode::kDimensionMismatch,
          fmt::format("{} names for {} images", names.size(), images.size()));

  MonotonicityResult result;
  result.kind = config.kind;
  const features::ExtractOptions extract{config.pool, config.workers};
  for (double level : config.levels) {
    MonotonicityRow row;
    row.level = level;
    for (std::uint64_t seed : config.seeds) {
      std::vector<features::Image> distorted(images.size());
      parallel_for(images.size(), config.workers, [&](std::size_t i) {
        distorted[i] = distortions::apply(config.kind, images[i], level,
                                          distortions::image_seed(seed, names[i]));
      });
      const auto set = features::extract_images(backbone, distorted, extract);
      const auto gen = metric::summarize_ll(model, set, config.workers);
      row.gen.push_back(gen);
      row.fld_plus.push_back(metric::fld_plus(real, gen));
    }
    const double n = static_cast<double>(row.fld_plus.size());
    double mean = 0;
    for (double v : row.fld_plus) mean += v;
    mean /= n;
    double ss = 0;
    for (double v : row.fld_plus) ss += (v - mean) * (v - mean);
    row.mean_fld_plus = mean;
    row.std_fld_plus = row.fld_plus.size() > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
    result.rows.push_back(std::move(row));
  }
  return result;
}

template MonotonicityResult run_monotonicity<float>(
    const flow::FlowModel<float>&, const metric::LogLikelihoodSummary&, const features::Backbone&,
    const std::vector<features::Image>&, const std::vector<std::string>&, const MonotonicityConfig&);
template MonotonicityResult run_monotonicity<double>(
    const flow::FlowModel<double>&, const metric::LogLikelihoodSummary&, const features::Backbone&,
    const std::vector<features::Image>&, const std::vector<std::string>&, const MonotonicityConfig&);

}  // namespace fldplus::experiments
