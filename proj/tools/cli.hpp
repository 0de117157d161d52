#pragma once

#include <iosfwd>

namespace climfuse::cli {

inline constexpr int kSuccess = 0;
inline constexpr int kCheckFailure = 1;
inline constexpr int kUsageError = 2;

/// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace climfuse::cli
