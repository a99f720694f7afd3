#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace wow {

// Process exit codes.
enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitIntegrity = 3, kExitIo = 4 };

// Entry point behind the `wow` executable.  `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wow
