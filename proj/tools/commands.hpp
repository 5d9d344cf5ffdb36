#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hotmv::cli {

/// Runs the hotmv command line with args (args[0] is the program name) and
/// returns the process exit code: 0 success, 1 usage, 2 data, 3 numerical.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hotmv::cli
