#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace ecgode {

// Exit codes of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitInvalidData = 2,
    kExitDiverged = 3,
};

/// Runs one CLI invocation. `args` excludes the program name. Machine output
/// goes to `out` as CSV, diagnostics to `err`.
int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace ecgode
