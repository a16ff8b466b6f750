#pragma once

#include <iosfwd>

namespace conncalc {

// Exit codes: 0 ok, 1 a mathematical check failed, 2 input or schema error,
// 3 an iteration budget was exhausted.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace conncalc
