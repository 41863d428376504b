#pragma once

#include <string>
#include <vector>

namespace qdsim {

inline constexpr const char* kVersion = "1.0.0";

// Entry point behind main(): parses flags/subcommand, loads the JSON config,
// runs the command, writes primary outputs plus a run record into --out.
// Returns a process exit code (0 only when every requested computation
// completed).
int cli_main(const std::vector<std::string>& args);

}  // namespace qdsim
