#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fastglz::cli {

/// Exit codes of run_command.
enum ExitCode : int { kOk = 0, kValidation = 1, kNumerical = 2 };

/// Runs one subcommand (fit, path, family, bench, tsreg, mem). `args` starts
/// with the subcommand name. Results go to files named by the flags; short
/// messages go to `out`; failures print one JSON object to `err`.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// argv form for main(); argv[0] is the program name.
int run_command(int argc, const char* const* argv);

/// The --threads value if positive, else FASTGLZ_THREADS, else all cores.
int resolve_threads(int flag);

}  // namespace fastglz::cli
