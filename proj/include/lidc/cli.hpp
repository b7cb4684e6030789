#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lidc {

/// Exit codes of the command-line tool.
namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kUsage = 2;
inline constexpr int kNotFound = 3;
inline constexpr int kIntegrity = 4;
} // namespace exit_code

/// Runs the command-line tool; `args` excludes the program name.
///
/// Client commands (submit, status, fetch, publish, sim metrics/inspect/apply) act on a
/// session kept in the --store directory: the topology, the seed and a journal of every
/// command with its simulated time. Each invocation replays the journal, runs the new
/// command at (session clock + --advance) until it completes, and appends it.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace lidc
