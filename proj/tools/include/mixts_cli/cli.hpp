#pragma once

#include <iosfwd>

namespace mixts::cli {

// Runs the `mixts` command line. Returns the process exit code:
// 0 on success, 2 on configuration or input errors, 3 on numerical errors.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mixts::cli
