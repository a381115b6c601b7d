#ifndef DMCROP_TOOLS_CLI_HPP_
#define DMCROP_TOOLS_CLI_HPP_

#include <ostream>

namespace dmcrop::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUsage = 2;

/// Runs one dmcrop subcommand. Results go to `out`; failures are reported as
/// a single JSON line {"error": kind, "message": text} on `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dmcrop::cli

#endif  // DMCROP_TOOLS_CLI_HPP_
