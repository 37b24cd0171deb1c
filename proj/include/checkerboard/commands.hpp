#pragma once

#include <iosfwd>

namespace checkerboard::cli {

/// Command-line entry point: gen-data, validate-fem, train, optimize, eval.
/// Returns the process exit code: 0 on success, 1 when validation checks
/// fail, and the category code of any Error otherwise.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace checkerboard::cli
