#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sativ {

/// Exit codes: 0 success, 1 validation or usage error, 2 numerical failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitNumerical = 2;

/// Subcommands: simulate, estimate, effects, montecarlo, ior-test,
/// validate-design. Results go to files or `out`; diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace sativ
