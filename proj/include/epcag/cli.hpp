#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace epcag::cli {

enum ExitCode : int {
    kOk = 0,
    kConfigError = 1,
    kNoPreimage = 2,
    kIntegrationFailure = 3,
    kConditionFailure = 4,
};

/// Runs `epcag-lab` with args (program name excluded); summaries go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace epcag::cli
