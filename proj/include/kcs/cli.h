#pragma once

#include <ostream>

namespace kcs {

// Entry point of the kcs command-line tool. Returns the process exit code;
// 0 iff no error was reported.
int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err);

}  // namespace kcs
