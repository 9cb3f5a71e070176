#pragma once

#include <string>
#include <vector>

namespace lstn {

// Command-line front end.  `args` excludes the program name.  Returns the
// process exit code: 0 on success, 1 on usage or configuration errors, 2 on
// data or validation errors.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, char** argv);

}  // namespace lstn
