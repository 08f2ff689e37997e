#ifndef XMSMO_CLI_HPP
#define XMSMO_CLI_HPP

#include <iosfwd>

namespace xmsmo::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;
inline constexpr int kExitUsage = 2;

/// Entry point shared by the executable and in-process tests. argv[0] is
/// the program name. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace xmsmo::cli

#endif  // XMSMO_CLI_HPP
