#pragma once

#include <iosfwd>

namespace cft::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

// Environment variable naming the config file used when --config is absent.
inline constexpr const char* kConfigEnv = "CFTSIM_CONFIG";

int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cft::cli
