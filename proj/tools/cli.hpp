#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "instrec/error.hpp"

namespace instrec::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kLayout = 2,
  kDecode = 3,
  kSchema = 4,
  kTraining = 5,
};

int exit_code_for(ErrorCode code) noexcept;

/// Runs one command line (arguments without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace instrec::cli
