#pragma once

namespace advshift {

// Full command-line entry point (train | eval | sweep | ablate |
// project-bench | diag). Returns the process exit code:
//   0 success, 1 bad configuration or malformed input, 2 runtime failure.
int run_cli(int argc, const char* const* argv);

}  // namespace advshift
