#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "semdepth/harness.hpp"

namespace semdepth {

struct CommandResult {
    int exit_code = 0;  ///< 0 ok, 1 runtime failure, 2 usage or config error
    std::string summary;
    std::vector<std::filesystem::path> paths;
};

/// Runs one command line (without the program name). Writes the summary line and paths to
/// `out`, errors to `err`.
CommandResult run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Config file keys (data paths relative to the file) overridden by `key=value` items.
/// A key given twice among the overrides is a ConfigError, so override order never matters.
[[nodiscard]] RunConfig resolve_run_config(const std::optional<std::filesystem::path>& config_file,
                                           const std::vector<std::string>& overrides);

}  // namespace semdepth
