#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace tasep {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitWarning = 3;

/// Runs one invocation. `args` excludes the program name. Data goes to
/// `out`, prose and diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tasep
