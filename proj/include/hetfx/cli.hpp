#pragma once

#include <iosfwd>

namespace hetfx {

/// Entry point of the hetfx command line tool. Returns the process exit
/// code: 0 on success, 2 for usage, input or validation errors, 3 for
/// numerical failures.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hetfx
