// psap command line: generators, validation, single runs and comparisons.
#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace psap::cli {

enum ExitCode { kOk = 0, kUsage = 1, kInput = 2, kRuntime = 3 };

// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string sha256_hex(const std::string& bytes);

inline constexpr const char* kVersion = "0.1.0";

}  // namespace psap::cli
