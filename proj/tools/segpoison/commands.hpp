#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace segpoison::cli {

// Stable exit codes for scripting.
enum ExitCode : int {
  kExitOk = 0,
  kExitInputError = 1,
  kExitIoError = 2,
};

// Entry point shared by the executable and the tests. `args` excludes the
// program name. Every subcommand writes a run manifest next to its output.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace segpoison::cli
