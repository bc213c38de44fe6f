#pragma once

#include <string>
#include <vector>

namespace pabi {

// Full command-line front end; args exclude the program name.  Returns the
// process exit code: 0 success, 1 failed checks or failed evaluations,
// 2 schema or configuration errors.
int run_cli(std::vector<std::string> args);

} // namespace pabi
