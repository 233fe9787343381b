#pragma once

#include <string>
#include <vector>

namespace edr::cli {

/// Exit codes: 0 success, 1 invalid configuration or input, 2 missing file.
int run(const std::vector<std::string>& args);
int run(int argc, const char* const* argv);

}  // namespace edr::cli
