#pragma once

#include <ostream>

namespace topoforge {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  exit_ok = 0,
  exit_schema = 2,
  exit_lifting = 3,
  exit_config = 4,
  exit_runtime = 5,
};

/// Entry point of the `topoforge` tool: lift | stats | split | run | gradcheck.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace topoforge
