#pragma once

#include <iosfwd>

namespace mitra {

/// Entry point for the `mitra` tool. Returns the process exit code; one-line
/// diagnostics go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Asks a running `serve` command to shut down (also wired to SIGINT/SIGTERM).
void request_cli_shutdown();

}  // namespace mitra
