#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace htc::cli {

// Exit codes: 0 success, 1 input error, 2 internal failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitInternal = 2;

// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace htc::cli
