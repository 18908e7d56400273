#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace citysplat::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;

/// Entry point shared by the executable and the tests. Subcommands:
/// synth, partition, fuse, compress, render, bench, serve.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace citysplat::cli
