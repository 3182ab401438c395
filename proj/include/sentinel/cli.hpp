#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sentinel {

/// Runs one `recall-sentinel` subcommand. `args` excludes the program name.
/// Returns 0 on success, 1 on a validation or runtime failure, 2 on a usage error.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace sentinel
