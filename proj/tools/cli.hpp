#pragma once

#include <string>
#include <vector>

namespace sage::cli {

// Runs the command line; returns the process exit code (0 ok, 1 numerical failure, 2 input error).
int run(const std::vector<std::string>& args);

}  // namespace sage::cli
