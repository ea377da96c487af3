#pragma once

#include <string>
#include <vector>

namespace blowup {

// Full command dispatch; argv[0] is the program name.  Returns the process
// exit code: 0 success, 1 validation failure, 2 numerical fault, 64 usage.
int run_cli(int argc, const char* const* argv);

// Convenience for tests; args exclude the program name.
int run_cli(const std::vector<std::string>& args);

}  // namespace blowup
