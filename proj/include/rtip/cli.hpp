#pragma once

#include <iosfwd>

namespace rtip {

/// Entry point of the rtip command-line tool. Returns the process exit code:
/// 0 success, 1 usage or configuration error, 2 failed mathematical
/// precondition, 3 convergence failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rtip
