#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vercore::cli {

/// Process exit statuses.
enum ExitStatus : int {
  kOk = 0,
  kMismatch = 1,
  kUsage = 2,
  kInputError = 3,
  kSimulationError = 4,
};

/// Runs the `vercore` command line. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vercore::cli
