#pragma once

#include <string>
#include <vector>

namespace uclab::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kFalsified = 2;

// Subcommands in the order `all` runs them.
const std::vector<std::string>& subcommands();

// argv[0] is the program name.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

}  // namespace uclab::cli
