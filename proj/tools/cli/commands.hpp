#pragma once

#include <string>
#include <vector>

namespace ufo::cli {

// Exit codes: 0 success, 2 usage or configuration error, 3 numeric failure.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

// Runs one `ufo` command line; args excludes the program name.
int run(const std::vector<std::string>& args);

}  // namespace ufo::cli
