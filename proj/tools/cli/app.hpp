#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ojaflow::cli {

/// Full command line entry point (args excludes the program name). Returns
/// the process exit code; the summary JSON goes to `out` unless --quiet,
/// diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ojaflow::cli
