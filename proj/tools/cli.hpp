#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace pcweibull::cli {

/// Exit codes: 0 success, 1 numeric or model failure, 2 usage or input error.
inline constexpr int kOk = 0;
inline constexpr int kNumericFailure = 1;
inline constexpr int kUsageError = 2;

/// Runs one command. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pcweibull::cli
