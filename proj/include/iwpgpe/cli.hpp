#ifndef IWPGPE_CLI_HPP_
#define IWPGPE_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace iwpgpe {

inline constexpr const char* kCodeVersion = "0.1.0";

// Exit codes of run_cli.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // a run or an oracle check failed
inline constexpr int kExitUsage = 2;    // invalid arguments or configuration

// Entry point behind the `iwpgpe` executable. `args` excludes the program
// name; the first element selects the subcommand (train, eval, oracle).
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace iwpgpe

#endif  // IWPGPE_CLI_HPP_
