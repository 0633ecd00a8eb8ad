#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace riskmdp {

enum ExitCode : int {
  kExitSat = 0,
  kExitUnsat = 1,
  kExitUnknown = 2,
  kExitUsage = 64,
  kExitInvalid = 65,
};

/// Runs the command line front end.  `args` excludes the program name.
/// Subcommands: check, evaluate, simulate, mec, generate, gadget-sat.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace riskmdp
