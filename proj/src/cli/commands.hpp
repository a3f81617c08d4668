#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace skinstack::cli {

/// Process exit codes.
enum ExitCode : int {
    kSuccess = 0,
    kUsageError = 2,
    kDataError = 3,
    kNumericError = 4,
};

/// Runs one `skinstack` invocation. `args` excludes the program name.
/// Normal output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace skinstack::cli
