#pragma once

#include <string>
#include <vector>

namespace hfo::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kMissingCalibration = 2,
    kBadInput = 3,
    kNoAdmissibleConfig = 4,
};

/// Entry point of the `hfo` tool; argv[0] is the program name.
int run(const std::vector<std::string>& args);

}  // namespace hfo::cli
