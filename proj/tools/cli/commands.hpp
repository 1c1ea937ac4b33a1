#pragma once

#include <filesystem>
#include <string_view>

#include "cli/config.hpp"

namespace ojaflow::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitNumerical = 2;
inline constexpr int kExitAmbiguous = 3;

inline constexpr int kSummarySchema = 1;

struct CommandResult {
  int exit_code = kExitOk;
  Json summary;
};

// Each command takes a resolved config, writes its CSV files under the
// config's "out" directory and returns the summary (not yet written).
CommandResult cmd_simulate(const Json& cfg);
CommandResult cmd_predict(const Json& cfg);
CommandResult cmd_rates(const Json& cfg);
CommandResult cmd_online(const Json& cfg);
CommandResult cmd_riccati(const Json& cfg);

/// Dispatches, maps library errors to exit codes, and writes
/// <out>/<command>.json. Throws ConfigError for configuration problems found
/// while running.
CommandResult run_command(std::string_view command, const Json& cfg);

}  // namespace ojaflow::cli
