#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace rvd::cli {

enum ExitCode : int {
  kOk = 0,
  kViolations = 1,
  kUsage = 2,
  kIoError = 3,
};

struct Context {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
  std::optional<std::string> env_root;  // RVD_ROOT
  std::string default_author;           // used when --author is not given
};

/// Runs one command. `args` excludes the program name.
int run(const std::vector<std::string>& args, Context& ctx);

}  // namespace rvd::cli
