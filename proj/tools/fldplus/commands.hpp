#pragma once

#include <CLI11.hpp>

namespace fldplus::cli {

void register_commands(CLI::App& app);

}  // namespace fldplus::cli
