#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace climssm::cli {

enum ExitCode : int { exit_ok = 0, exit_usage = 2, exit_data = 3, exit_numerical = 4 };

struct RunConfig {
  std::filesystem::path data;
  std::filesystem::path config;  // model config; defaults apply when empty
  std::filesystem::path out = ".";
  std::uint64_t seed = 1;
  std::size_t members = 1000;
  unsigned threads = 1;
  std::optional<int> first_year;  // --years FIRST:LAST trims the data
  std::optional<int> last_year;

  // explore
  int max_lag = 60;

  // select
  std::vector<int> lengths;          // empty: 90..330 step 30
  std::vector<unsigned> start_months;  // empty: 1..12
  std::vector<std::string> kinds{"mean-shift", "ac-shift"};

  // analyze
  std::size_t batch = 25;
  long summary_stride = 5;
  std::optional<int> check_start;  // default: 20 years after the data start
  std::size_t check_realizations = 100;
  std::vector<int> winters;        // forcing evolution; default: last full winter

  // forecast
  std::optional<int> forecast_from;  // default: 20 years after the data start
  int window = 20;
  std::filesystem::path external;
  std::string external_season = "DJF";

  // simulate
  std::string start = "1950-01-01";
  long days = 365L * 70 + 17;
  std::size_t paths = 1;
  bool write_states = false;
};

// Each command writes its files into config.out and returns the paths it
// wrote. Errors surface as DataError, ConfigError or NumericalError.
std::vector<std::filesystem::path> cmd_explore(const RunConfig& config);
// Writes the report and the fitted config even when the optimiser did not
// converge; `converged` reports the status.
std::vector<std::filesystem::path> cmd_fit(const RunConfig& config, bool* converged = nullptr);
std::vector<std::filesystem::path> cmd_select(const RunConfig& config);
std::vector<std::filesystem::path> cmd_analyze(const RunConfig& config);
std::vector<std::filesystem::path> cmd_forecast(const RunConfig& config);
std::vector<std::filesystem::path> cmd_simulate(const RunConfig& config);

// Parses the command line, runs the subcommand and maps failures to exit
// codes: 0 success, 2 usage or configuration, 3 data, 4 numerical.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace climssm::cli
