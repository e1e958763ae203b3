#pragma once

#include <string>
#include <vector>

namespace swpipe::cli {

// Runs the swpipe command line. `args` excludes the program name. Returns the
// process exit code: 0 ok, 2 usage/config/validation error, 3 missing
// upstream artifacts, 4 adapter failure, 1 anything else.
int run(const std::string& program, const std::vector<std::string>& args);

}  // namespace swpipe::cli
