#pragma once

#include <ostream>

namespace oodenv {

/// Entry point of the `oodenv` command line tool. Returns the process exit
/// code: 0 on success, 2 on a configuration error, 3 on a data error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace oodenv
