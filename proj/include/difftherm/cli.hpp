#pragma once

// Command-line front end: `flash`, `experiment` and `components`.
//
// Exit status: 0 success (flash converged), 2 flash ran but did not
// converge, 1 any error (bad arguments, bad config, I/O).

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "difftherm/experiments.hpp"
#include "difftherm/flash.hpp"

namespace difftherm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNotConverged = 2;

enum class LogLevel { quiet, info, debug };

struct RunConfig {
    std::optional<std::filesystem::path> components_path; // resolved against the config file's directory
    std::filesystem::path output_dir = "results";
    LogLevel log_level = LogLevel::info;
    std::vector<experiments::Scenario> scenarios;

    const experiments::Scenario& scenario(std::string_view id) const;
};

/// Parses a config document; `base` resolves relative component paths.
RunConfig parse_config(std::string_view document, const std::filesystem::path& base = {});
RunConfig load_config(const std::filesystem::path& path);

/// One scenario table; unknown keys are rejected.
experiments::Scenario parse_scenario(const YAML::Node& node);

/// Solver tolerances and limits from a `solver:` table.
void apply_solver_options(const YAML::Node& node, flash::FlashOptions& options);

/// JSON record for a flash result, residual trace included.
std::string flash_result_json(const flash::FlashResult& result, const flash::FlashSpec& spec,
                              const PropertyPackage& pkg);

/// Parses and runs one command line. argv[0] is the program name.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace difftherm::cli
