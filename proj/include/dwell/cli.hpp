#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dwell {

enum ExitCode { kExitOk = 0, kExitConfig = 2, kExitNumeric = 3, kExitVerdict = 4 };

/// Subcommands: spectrum, phaseplane, bifurcate, groundstate, evolve, shadow.
/// `--config file.json` supplies option values by long name; flags on the command line win.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dwell
