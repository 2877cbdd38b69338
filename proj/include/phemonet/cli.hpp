#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace phemonet::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kIoOrFormat = 2,
    kVerificationFailed = 3,
};

/// Entry point for the `phemonet` binary.
int run(int argc, char** argv);

/// Same as run() with explicit streams; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace phemonet::cli
