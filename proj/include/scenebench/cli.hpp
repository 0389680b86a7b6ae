#pragma once

#include <string>
#include <vector>

namespace scenebench::cli {

// Exit codes: 0 success, 1 IO/parse error, 2 pipeline failure.
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args);

}  // namespace scenebench::cli
