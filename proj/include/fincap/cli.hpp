#pragma once

// Command-line front end. Exit codes: 0 ok, 1 a check failed, 2 a solver did
// not converge, 3 bad input (configuration, domain or metric errors).

#include <iosfwd>
#include <string>
#include <vector>

namespace fincap {

enum ExitCode : int { exit_ok = 0, exit_check_failed = 1, exit_not_converged = 2, exit_bad_input = 3 };

// `args` excludes the program name. Never throws.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fincap
