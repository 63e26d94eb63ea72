#pragma once

namespace crispo {

// Entry point behind the `crispo` binary; returns the process exit code
// (0 ok, 2 config error, 3 provider error, 4 data error).
int run_cli(int argc, const char* const* argv);

} // namespace crispo
