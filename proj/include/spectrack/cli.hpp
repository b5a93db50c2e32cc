#pragma once

#include <iosfwd>

namespace spectrack::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitPoisoned = 3;

/// Entry point shared by the executable and the tests. Never throws; every
/// failure maps onto one of the exit codes above.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace spectrack::cli
