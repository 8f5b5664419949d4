#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hgrf {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;

/// Runs the hgrf command line with args (excluding the program name). Normal output goes to
/// out, diagnostics to err. Returns the exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hgrf
