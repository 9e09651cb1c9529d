#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>

#include "commands.hpp"
#include "fldplus/error.hpp"
#include "fldplus/version.hpp"

namespace {

// Errors leave as one JSON object on stderr.
int report_error(const std::string& code, const std::string& message, int exit_code) {
  nlohmann::ordered_json j;
  j["error"] = {{"code", code}, {"message", message}};
  std::fprintf(stderr, "%s\n", j.dump().c_str());
  return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FLD+ generative-image metric: feature extraction, flow training and scoring"};
  app.set_version_flag("--version", std::string(fldplus::kToolVersion));
  app.require_subcommand(1);
  fldplus::cli::register_commands(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report_error("usage", e.what(), 2);
  } catch (const fldplus::Error& e) {
    return report_error(std::string(fldplus::to_string(e.code())), e.what(), 1);
  } catch (const std::filesystem::filesystem_error& e) {
    return report_error("io", e.what(), 1);
  } catch (const std::exception& e) {
    return report_error("internal", e.what(), 1);
  }
  return 0;
}
