#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lope::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

/// Entry point of the `lope` tool; args[0] is the program name.
/// Returns 0 on success, 1 on validation errors (bad flags, configs, data),
/// 2 on runtime failures.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lope::cli
