#pragma once

#include <iosfwd>

namespace maser {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kInput = 2;
inline constexpr int kNumerical = 3;
}  // namespace exit_code

/// Entry point of the maser_bench tool. Subcommands: simulate, sweep,
/// analyze, fit-s11, s11, calibrate, export, serve.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace maser
