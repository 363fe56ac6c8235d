#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace causalreach::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitInconclusive = 2;

/// Runs one command line (without the program name). Reports go to `out` and
/// to files under --out; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace causalreach::cli
