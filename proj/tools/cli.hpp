#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kubecs::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kDataError = 2,
  kNotConverged = 3,
};

/// Runs the kubecs command line. `args` excludes the program name. Results
/// that a subcommand prints (psnr) go to `out`; every diagnostic goes to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kubecs::cli
