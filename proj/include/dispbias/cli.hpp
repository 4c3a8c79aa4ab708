#pragma once

#include <iosfwd>

namespace dispbias {

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitConfig = 2,
  kExitData = 3,
  kExitNonConvergence = 4,
};

/// Entry point of the command-line tool. Reports go to --out or `out`;
/// diagnostics go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dispbias
