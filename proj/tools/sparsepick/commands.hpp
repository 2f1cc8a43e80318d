#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sparsepick::cli {

enum ExitCode : int {
    kOk = 0,
    kInternalError = 1,
    kConfigError = 2,
    kEmptyResult = 3,
};

/// Runs the command line `args` (args[0] is the program name). Logs go to `err`,
/// short results (chosen alpha, scores) to `out`, everything else to files.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sparsepick::cli
