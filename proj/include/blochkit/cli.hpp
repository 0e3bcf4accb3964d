#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace blochkit::cli {

enum ExitCode : int { kPass = 0, kCheckFailure = 1, kInputError = 2, kNumericalFailure = 3 };

/// Runs the command line `args` (without the program name). Reports go to
/// `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace blochkit::cli
