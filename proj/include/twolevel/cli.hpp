#ifndef TWOLEVEL_CLI_HPP
#define TWOLEVEL_CLI_HPP

// Subcommands of the `twolevel` tool. Each takes the effective configuration
// and produces a JSON report plus a CSV rendering.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "twolevel/config.hpp"

namespace twolevel {

enum class OutputFormat { Csv, Json };

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitRuntime = 2,
  kExitComparison = 3,
};

struct RunSpec {
  std::string command;  // analytic, spectrum, bandfraction, simulate, populations, compare
  std::string params_path;
  std::vector<std::string> overrides;
  std::string output_path;  // empty writes to stdout
  std::optional<OutputFormat> output_format;
  std::optional<std::uint64_t> seed;
  bool strict = false;
};

struct CommandOutput {
  nlohmann::ordered_json report;
  std::string csv;
  bool pass = true;
  OutputFormat default_format = OutputFormat::Json;
};

CommandOutput run_analytic(const KeyValueConfig& cfg);
CommandOutput run_spectrum(const KeyValueConfig& cfg);
CommandOutput run_bandfraction(const KeyValueConfig& cfg);
CommandOutput run_simulate(const KeyValueConfig& cfg);
CommandOutput run_populations(const KeyValueConfig& cfg);
CommandOutput run_compare(const KeyValueConfig& cfg);

/// Loads the config, applies overrides, dispatches, writes the output and maps
/// failures onto exit codes.
int execute(const RunSpec& spec, std::ostream& out, std::ostream& err);

/// Parses argv with CLI11 and calls execute.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace twolevel

#endif  // TWOLEVEL_CLI_HPP
