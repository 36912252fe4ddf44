#pragma once

#include <iosfwd>

namespace flim::app {

/// Runs the `flim` command line. Results go to `out`; failures print
/// {"v":1,"error":kind,"message":...} to `err` and return nonzero
/// (2 for usage errors, 1 otherwise).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace flim::app
