#pragma once

#include <ostream>

namespace divswap::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kFileFormat = 2,
  kDimension = 3,
};

/// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace divswap::cli
