#include "fldplus/metric/report.hpp"

#include <json.hpp>
#include <fmt/format.h>

#include <cmath>
#include <cstdlib>
#include <ctime>

#include "fldplus/error.hpp"
#include "fldplus/hash.hpp"
#include "fldplus/version.hpp"

namespace fldplus::metric {

using nlohmann::ordered_json;

std::string ArtifactInfo::config_sha256() const { return sha256_hex(config_json); }

std::string report_timestamp() {
  const char* env = std::getenv("SOURCE_DATE_EPOCH");
  if (!env || !*env) return "";
  char* end = nullptr;
  const long long secs = std::strtoll(env, &end, 10);
  if (*end != '\0' || secs < 0) {
    fail(ErrorCode::kInvalidArgument, std::string("SOURCE_DATE_EPOCH is not a timestamp: ") + env);
  }
  const std::time_t t = static_cast<std::time_t>(secs);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

FeatureSummary FeatureSummary::of(const features::FeatureSet& set) {
  return {set.provenance.source, set.provenance.backbone, set.provenance.pooling,
          set.provenance.image_list_sha256, set.count(), set.dim};
}

MetricReport make_report(const LogLikelihoodSummary& real, const LogLikelihoodSummary& gen) {
  MetricReport r;
  r.real_summary = real;
  r.gen_summary = gen;
  r.fld_plus = fld_plus(real, gen);
  r.fld_plus_std_error = fld_plus_std_error(real, gen);
  r.timestamp = report_timestamp();
  return r;
}

namespace {

ordered_json summary_json(const LogLikelihoodSummary& s) {
  ordered_json j;
  j["count"] = s.count;
  j["mean"] = s.mean;
  j["std_error"] = s.std_error;
  j["min"] = s.min;
  j["max"] = s.max;
  return j;
}

ordered_json features_json(const FeatureSummary& f) {
  ordered_json j;
  j["source"] = f.source;
  j["backbone"] = f.backbone;
  j["pooling"] = f.pooling;
  j["image_list_sha256"] = f.image_list_sha256;
  j["count"] = f.count;
  j["dim"] = f.dim;
  return j;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string num(double v) { return fmt::format("{:.17g}", v); }

}  // namespace

std::string MetricReport::to_json() const {
  ordered_json j;
  j["fld_plus"] = fld_plus;
  j["fld_plus_std_error"] = fld_plus_std_error;
  j["real"] = summary_json(real_summary);
  j["gen"] = summary_json(gen_summary);
  j["fd_baseline"] = fd_baseline ? ordered_json(*fd_baseline) : ordered_json(nullptr);
  j["model_id"] = model_id;
  j["real_features"] = features_json(real_features);
  j["gen_features"] = features_json(gen_features);
  ordered_json prov;
  prov["tool"] = std::string(kToolName);
  prov["version"] = std::string(kToolVersion);
  prov["command"] = artifact.command;
  prov["config_sha256"] = artifact.config_sha256();
  prov["seed"] = artifact.seed;
  ordered_json inputs = ordered_json::object();
  for (const auto& [label, hash] : artifact.inputs) inputs[label] = hash;
  prov["inputs"] = inputs;
  prov["timestamp"] = timestamp;
  j["provenance"] = prov;
  return j.dump(2) + "\n";
}

std::string MetricReport::csv_header() {
  return "fld_plus,fld_plus_std_error,real_count,real_mean,real_std_error,real_min,real_max,"
         "gen_count,gen_mean,gen_std_error,gen_min,gen_max,fd_baseline,model_id,real_backbone,"
         "real_pooling,gen_backbone,gen_pooling,seed,config_sha256,tool_version,timestamp\n";
}

std::string MetricReport::csv_row() const {
  const auto& r = real_summary;
  const auto& g = gen_summary;
  return fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                     num(fld_plus), num(fld_plus_std_error), r.count, num(r.mean),
                     num(r.std_error), num(r.min), num(r.max), g.count, num(g.mean),
                     num(g.std_error), num(g.min), num(g.max),
                     fd_baseline ? num(*fd_baseline) : std::string(), csv_field(model_id),
                     csv_field(real_features.backbone), real_features.pooling,
                     csv_field(gen_features.backbone), gen_features.pooling, artifact.seed,
                     artifact.config_sha256(), kToolVersion, timestamp);
}

}  // namespace fldplus::metric
