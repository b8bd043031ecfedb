#pragma once

// Command-line front end. Exit codes: 0 success, 1 run finished with
// failures (or a backend gave up), 2 configuration or input error.

#include <iosfwd>
#include <string>
#include <vector>

namespace usejudge {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailures = 1;
inline constexpr int kExitConfig = 2;

/// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace usejudge
