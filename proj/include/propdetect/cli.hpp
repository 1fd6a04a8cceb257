#pragma once

#include <iosfwd>

namespace propdetect {

/// Exit codes: 0 success, 1 validation or usage error, 2 I/O or provider error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace propdetect
