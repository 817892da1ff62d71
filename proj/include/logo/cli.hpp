// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace logo {

// Command-line front end. `args` excludes the program name. Returns the
// process exit code: 0 on success, 1 on runtime or I/O failure, 2 on
// configuration or usage errors. All diagnostics go to stderr.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, const char* const* argv);

}  // namespace logo
