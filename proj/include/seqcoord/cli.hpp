#pragma once

#include <ostream>

namespace seqcoord {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // selftest red or unexpected error
inline constexpr int kExitConfig = 2;
inline constexpr int kExitGuard = 3;
inline constexpr int kExitIo = 4;

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace seqcoord
