#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace polsynth::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitUsage = 2;

/// Runs one `polsynth` command. `args` excludes the program name.
/// Returns 0 on success, 1 when an input fails validation or a schema
/// check, 2 on usage errors (unknown flags, missing files).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

}  // namespace polsynth::cli
