#pragma once

#include <ostream>

namespace cardaudit {

/// Exit codes: 0 success, 1 domain failure, 2 usage or I/O failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cardaudit
