#include "common.hpp"

#include <fstream>

#include "fldplus/error.hpp"
#include "fldplus/hash.hpp"
#include "fldplus/metric/report.hpp"
#include "fldplus/version.hpp"

namespace fldplus::cli {

namespace fs = std::filesystem;

void write_text(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path.string());
}

OrderedJson provenance(const std::string& command, const Json& config, std::uint64_t seed,
                       const Inputs& inputs) {
  OrderedJson p;
  p["tool"] = std::string(kToolName);
  p["version"] = std::string(kToolVersion);
  p["command"] = command;
  p["config"] = config;
  p["config_sha256"] = sha256_hex(config.dump());
  p["seed"] = seed;
  OrderedJson in = OrderedJson::object();
  for (const auto& [label, hash] : inputs) in[label] = hash;
  p["inputs"] = in;
  p["timestamp"] = metric::report_timestamp();
  return p;
}

void require_file(const fs::path& path, const std::string& what) {
  require(fs::is_regular_file(path), ErrorCode::kIo, what + " not found: " + path.string());
}

void require_dir(const fs::path& path, const std::string& what) {
  require(fs::is_directory(path), ErrorCode::kIo, what + " is not a directory: " + path.string());
}

}  // namespace fldplus::cli
