#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace spikecp::cli {

/// Parses `args` (without the program name) and runs one subcommand:
/// gen, train, infer, experiment, sweep or inspect. Returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spikecp::cli
