#pragma once

namespace metaseg::cli {

/// Parses the command line and runs one subcommand. Returns the process exit
/// code: 0 on success, 1 on any toolkit error, CLI11's code on usage errors.
int run(int argc, char** argv);

}  // namespace metaseg::cli
