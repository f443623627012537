#pragma once

#include <iosfwd>

namespace qhjlab::cli {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitError = 1, kExitCheckFailed = 2 };

/// qhjlab <subcommand> --config <path> [--out <dir>] [--tol key=value]...
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qhjlab::cli
