// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>

// Command-line front end. Kept in the library so that tests can drive it.
namespace annulus::cli {

/// Exit codes: 0 success, 1 runtime failure, 2 invalid input.
inline constexpr int kOk = 0;
inline constexpr int kRuntimeError = 1;
inline constexpr int kUsageError = 2;

/// Parses argv, runs one subcommand and writes CSV (or JSON) to --out or `out`.
/// Diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace annulus::cli
