#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fldplus/features/feature_set.hpp"
#include "fldplus/metric/summary.hpp"

namespace fldplus::metric {

// Provenance block embedded in every output artifact.
struct ArtifactInfo {
  std::string command;
  std::string config_json;  // canonical (sorted keys) command configuration
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> inputs;  // label -> sha256

  std::string config_sha256() const;
};

// UTC time from SOURCE_DATE_EPOCH as "YYYY-MM-DDTHH:MM:SSZ", or "" when unset,
// so reports stay byte-identical across reruns.
std::string report_timestamp();

struct FeatureSummary {
  std::string source;
  std::string backbone;
  std::string pooling;
  std::string image_list_sha256;
  std::size_t count = 0;
  std::size_t dim = 0;

  static FeatureSummary of(const features::FeatureSet& set);
};

struct MetricReport {
  double fld_plus = 0;
  double fld_plus_std_error = 0;
  LogLikelihoodSummary real_summary;
  LogLikelihoodSummary gen_summary;
  std::optional<double> fd_baseline;
  std::string model_id;
  FeatureSummary real_features;
  FeatureSummary gen_features;
  ArtifactInfo artifact;
  std::string timestamp;

  std::string to_json() const;
  static std::string csv_header();
  std::string csv_row() const;
};

MetricReport make_report(const LogLikelihoodSummary& real, const LogLikelihoodSummary& gen);

}  // namespace fldplus::metric
