#pragma once

#include <string>
#include <vector>

namespace choicepred {

// Runs one CLI invocation. `args` excludes the program name. Returns the
// process exit code: 0 success, 1 usage/config error, 2 data error,
// 3 convergence failure.
int run_cli(std::vector<std::string> args);

}  // namespace choicepred
