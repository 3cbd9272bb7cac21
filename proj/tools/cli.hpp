#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace graphleaf::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kNumericError = 3 };

/// Entry point shared by the executable and the tests. `args[0]` is the
/// program name. Errors are reported on `err` as a single line
/// `error: <category>: <detail>`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace graphleaf::cli
