#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace carloss::cli {

enum ExitCode : int {
    kSuccess = 0,
    kInputError = 2,
    kNumericalError = 3,
    kDomainError = 4,
};

// Runs `carloss <args...>` (args excludes the program name) and returns the
// exit code. Diagnostics go to err, summaries to out.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace carloss::cli
