#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace tweetscope::cli {

inline constexpr const char* kVersion = "0.1.0";

// Runs one subcommand; args excludes the program name. Failures print one
// JSON line {"error": kind, "message": ...} to err and return non-zero.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tweetscope::cli
