#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tearing::cli {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,   // unexpected failure
  kUsage = 2,      // unknown flag, bad value, invalid configuration
  kIo = 3,         // missing, unreadable or malformed file
  kMismatch = 4,   // configuration does not match a checkpoint
  kNumeric = 5,    // non-finite training loss, failed gradient check
};

/// Entry point of the `tearnet` tool. argv[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tearing::cli
