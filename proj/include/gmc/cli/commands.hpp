#ifndef GMC_CLI_COMMANDS_HPP
#define GMC_CLI_COMMANDS_HPP

#include <ostream>
#include <string>
#include <vector>

#include "gmc/cli/config.hpp"

namespace gmc::cli {

/// Exit codes: 0 success / all tests pass, 1 a verification failure,
/// 2 configuration or I/O error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitConfig = 2;

/// Field samples: sample_NNNNN.csv per exported replica plus manifest.json.
int cmd_sample(const RunConfig& c, std::ostream& out);
/// Chaos measures: chaos_NNNNN.csv per exported replica plus summary.json.
int cmd_chaos(const RunConfig& c, std::ostream& out);
/// Verification suites: table on `out`, reports.jsonl in the output directory.
int cmd_verify(const RunConfig& c, std::ostream& out);
/// sweep_gamma.csv and/or sweep_eps.csv.
int cmd_sweep(const RunConfig& c, std::ostream& out);

/// Full command line, without the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gmc::cli

#endif  // GMC_CLI_COMMANDS_HPP
