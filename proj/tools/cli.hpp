#pragma once

#include <ostream>

namespace trios {

enum ExitCode : int { kOk = 0, kConfigError = 1, kRuntimeError = 2, kReplayMismatch = 3 };

// simulate | sweep | analyze | replay. Returns one of ExitCode.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace trios
