#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lfdx::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kIntegrity = 2, kEngine = 3 };

/// Subcommands: serve, run-experiment, replay, report, compare. See --help.
int run(int argc, char** argv);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Values of `column` from CSV text with a header row. "demos" is accepted as
/// shorthand for num_demonstrations.
std::vector<double> read_csv_column(const std::string& text, const std::string& column);

}  // namespace lfdx::cli
