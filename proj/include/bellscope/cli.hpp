#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace bellscope {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kSchema = 1;

enum ExitCode { kExitOk = 0, kExitValidation = 2, kExitSolver = 3 };

std::uint64_t fnv1a(const std::string& bytes);

// args exclude the program name
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace bellscope
