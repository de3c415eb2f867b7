#pragma once

namespace sisom {

// Full command-line entry point (argv[0] is the program name). Returns the
// process exit code: 0 success, 1 configuration/usage error, 2 runtime error.
int run_cli(int argc, const char* const* argv);

} // namespace sisom
