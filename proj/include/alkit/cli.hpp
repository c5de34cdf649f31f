#pragma once

namespace alkit {

// Entry point behind the `alkit` binary. Maps the error taxonomy onto exit
// codes: 0 success, 2 configuration (including numeric breakdowns and
// malformed config files), 3 capability mismatch, 4 I/O failure.
int run_cli(int argc, char** argv);

}  // namespace alkit
