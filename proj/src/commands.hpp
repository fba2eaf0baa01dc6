#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tiltwork::cli {

/// Runs the command line and returns the exit status: 0 on success, 1 on
/// invalid input, 2 on numerical failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// "a:b:n" gives n evenly spaced values from a to b inclusive; otherwise a
/// comma-separated list of values.
std::vector<double> parse_grid(const std::string& spec);

}  // namespace tiltwork::cli
