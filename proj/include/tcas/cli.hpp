#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace tcas::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs one subcommand (synth, train, eval, explain, gradcheck). `args`
/// excludes the program name. Results go to `out`; the effective config,
/// progress and diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int dispatch(int argc, const char* const* argv);

}  // namespace tcas::cli
