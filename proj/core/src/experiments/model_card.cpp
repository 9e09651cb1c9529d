#include "fldplus/experiments/model_card.hpp"

#include <json.hpp>
#include <fmt/format.h>

#include "fldplus/error.hpp"

namespace fldplus::experiments {

using nlohmann::json;
using nlohmann::ordered_json;

std::string ModelCard::to_json() const {
  ordered_json j;
  ordered_json s;
  s["count"] = real_summary.count;
  s["mean"] = real_summary.mean;
  s["std_error"] = real_summary.std_error;
  s["min"] = real_summary.min;
  s["max"] = real_summary.max;
  j["real_summary"] = s;
  ordered_json f;
  f["source"] = real_features.source;
  f["backbone"] = real_features.backbone;
  f["pooling"] = real_features.pooling;
  f["image_list_sha256"] = real_features.image_list_sha256;
  f["count"] = real_features.count;
  f["dim"] = real_features.dim;
  j["real_features"] = f;
  j["real_cache_sha256"] = real_cache_sha256;
  j["train_config"] = train_config_json.empty() ? ordered_json::object() : ordered_json::parse(train_config_json);
  j["best_epoch"] = best_epoch;
  j["stop_reason"] = stop_reason;
  return j.dump();
}

ModelCard ModelCard::parse(const std::string& metadata_json) {
  ModelCard c;
  try {
    const json j = json::parse(metadata_json);
    if (!j.contains("real_summary")) {
      fail(ErrorCode::kFormat, "checkpoint metadata has no real-set summary (was it written by 'fldplus train'?)");
    }
    const auto& s = j.at("real_summary");
    c.real_summary.count = s.at("count").get<std::size_t>();
    c.real_summary.mean = s.at("mean").get<double>();
    c.real_summary.std_error = s.at("std_error").get<double>();
    c.real_summary.min = s.at("min").get<double>();
    c.real_summary.max = s.at("max").get<double>();
    const auto& f = j.at("real_features");
    c.real_features.source = f.at("source").get<std::string>();
    c.real_features.backbone = f.at("backbone").get<std::string>();
    c.real_features.pooling = f.at("pooling").get<std::string>();
    c.real_features.image_list_sha256 = f.at("image_list_sha256").get<std::string>();
    c.real_features.count = f.at("count").get<std::size_t>();
    c.real_features.dim = f.at("dim").get<std::size_t>();
    c.real_cache_sha256 = j.at("real_cache_sha256").get<std::string>();
    c.train_config_json = j.at("train_config").dump();
    c.best_epoch = j.at("best_epoch").get<std::size_t>();
    c.stop_reason = j.at("stop_reason").get<std::string>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("malformed checkpoint metadata: ") + e.what());
  }
  return c;
}

void ModelCard::check_compatible(const metric::FeatureSummary& features, const std::string& label) const {
  require(features.dim == real_features.dim, ErrorCode::kDimensionMismatch,
          fmt::format("{} features have dim {}, the model was trained on dim {}", label, features.dim,
                      real_features.dim));
  require(features.backbone == real_features.backbone, ErrorCode::kInvalidArgument,
          fmt::format("{} features come from backbone '{}', the model was trained on '{}'", label,
                      features.backbone, real_features.backbone));
  require(features.pooling == real_features.pooling, ErrorCode::kInvalidArgument,
          fmt::format("{} features use {} pooling, the model was trained with {} pooling", label,
                      features.pooling, real_features.pooling));
}

}  // namespace fldplus::experiments
