#ifndef CROP_CLI_HPP
#define CROP_CLI_HPP

#include <iosfwd>

namespace crop {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Default output root when neither --out nor run.out is given.
inline constexpr const char* kOutDirEnv = "CROP_OUT_DIR";

// Entry point for the `crop` binary: train, eval and verify subcommands.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace crop

#endif  // CROP_CLI_HPP
