#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kgind {

/// Runs the command line (without the program name). Results go to `out`,
/// logs to standard error. Returns the process exit status.
int run_cli(const std::vector<std::string>& args, std::ostream& out);

}  // namespace kgind
