#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gcmp::cli {

/// Runs one subcommand (simulate, loglik, fit, validate); args exclude the
/// program name. Returns the process exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gcmp::cli
