#include <filesystem>
#include <ostream>
#include <thread>

#include "CLI11.hpp"
#include "cli.hpp"
#include "climssm/error.hpp"

namespace climssm::cli {

namespace {

void parse_years(const std::string& text, RunConfig& cfg) {
  const auto colon = text.find(':');
  try {
    if (colon == std::string::npos) {
      cfg.first_year = cfg.last_year = std::stoi(text);
    } else {
      if (colon > 0) cfg.first_year = std::stoi(text.substr(0, colon));
      if (colon + 1 < text.size()) cfg.last_year = std::stoi(text.substr(colon + 1));
    }
  } catch (const std::logic_error&) {
    throw ConfigError("--years expects FIRST:LAST, got '" + text + "'");
  }
  if (cfg.first_year && cfg.last_year && *cfg.first_year > *cfg.last_year) {
    throw ConfigError("--years range is empty: " + text);
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  cfg.threads = std::max(1u, std::thread::hardware_concurrency());
  std::string years;
  std::string check_start;

  CLI::App app{"State-space decomposition, attribution and forecasting of a daily climate index", "climssm"};
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->always_capture_default();
  app.add_option("--data", cfg.data, "daily CSV with date,value columns");
  app.add_option("--config", cfg.config, "model config (key = value); built-in defaults when omitted");
  app.add_option("--out", cfg.out, "output directory");
  app.add_option("--seed", cfg.seed, "random seed");
  app.add_option("--members", cfg.members, "sampled trajectories or forecast members")->check(CLI::PositiveNumber);
  app.add_option("--threads", cfg.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--years", years, "restrict the data to FIRST:LAST (either end may be omitted)");

  auto* explore = app.add_subcommand("explore", "periodogram, ACF, PACF and day-of-year variance");
  explore->add_option("--max-lag", cfg.max_lag, "largest ACF/PACF lag")->check(CLI::PositiveNumber);

  auto* fit = app.add_subcommand("fit", "maximum-likelihood fit of the model variances");

  auto* select = app.add_subcommand("select", "BIC grid over influence functions and forcing kinds");
  select->add_option("--lengths", cfg.lengths, "forced-period lengths in days")->delimiter(',');
  select->add_option("--starts", cfg.start_months, "start months 1..12")->delimiter(',');
  select->add_option("--kinds", cfg.kinds, "forcing kinds: mean-shift, ac-shift")->delimiter(',');

  auto* analyze = app.add_subcommand("analyze", "trajectory sampling, variance attribution and predictive checks");
  analyze->add_option("--batch", cfg.batch, "trajectories sampled per batch")->check(CLI::PositiveNumber);
  analyze->add_option("--stride", cfg.summary_stride, "days between component summary rows")->check(CLI::PositiveNumber);
  analyze->add_option("--check-start", check_start, "first year of the predictive check");
  analyze->add_option("--check-realizations", cfg.check_realizations, "simulations in the predictive check")
      ->check(CLI::PositiveNumber);
  analyze->add_option("--winters", cfg.winters, "winters (year of January) for the forcing evolution")->delimiter(',');

  auto* fcst = app.add_subcommand("forecast", "seasonal ensemble forecasts, baselines and skill");
  std::string forecast_from;
  fcst->add_option("--from", forecast_from, "first forecast year");
  fcst->add_option("--window", cfg.window, "moving-window length in years")->check(CLI::PositiveNumber);
  fcst->add_option("--external", cfg.external, "external forecast CSV with year,ensemble_mean");
  fcst->add_option("--external-season", cfg.external_season, "season of the external forecasts");

  auto* simulate = app.add_subcommand("simulate", "simulate daily series from the model");
  simulate->add_option("--start", cfg.start, "date of the first simulated day");
  simulate->add_option("--days", cfg.days, "number of days")->check(CLI::PositiveNumber);
  simulate->add_option("--paths", cfg.paths, "number of independent series")->check(CLI::PositiveNumber);
  simulate->add_flag("--states", cfg.write_states, "also write the simulated state paths");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_usage;
  }

  try {
    if (!years.empty()) parse_years(years, cfg);
    auto to_year = [](const std::string& text, const char* flag) {
      try {
        return std::stoi(text);
      } catch (const std::logic_error&) {
        throw ConfigError(std::string(flag) + " expects a year, got '" + text + "'");
      }
    };
    if (!check_start.empty()) cfg.check_start = to_year(check_start, "--check-start");
    if (!forecast_from.empty()) cfg.forecast_from = to_year(forecast_from, "--from");

    std::vector<std::filesystem::path> files;
    int code = exit_ok;
    if (*explore) {
      files = cmd_explore(cfg);
    } else if (*fit) {
      bool converged = false;
      files = cmd_fit(cfg, &converged);
      if (!converged) {
        err << "climssm: the likelihood maximisation did not converge; see " << files.front().string() << '\n';
        code = exit_numerical;
      }
    } else if (*select) {
      files = cmd_select(cfg);
    } else if (*analyze) {
      files = cmd_analyze(cfg);
    } else if (*fcst) {
      files = cmd_forecast(cfg);
    } else if (*simulate) {
      files = cmd_simulate(cfg);
    }
    for (const auto& f : files) out << f.string() << '\n';
    return code;
  } catch (const ConfigError& e) {
    err << "climssm: configuration error: " << e.what() << '\n';
    return exit_usage;
  } catch (const DataError& e) {
    err << "climssm: data error: " << e.what() << '\n';
    return exit_data;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "climssm: data error: " << e.what() << '\n';
    return exit_data;
  } catch (const NumericalError& e) {
    err << "climssm: numerical failure: " << e.what() << '\n';
    return exit_numerical;
  } catch (const std::invalid_argument& e) {
    err << "climssm: invalid argument: " << e.what() << '\n';
    return exit_usage;
  } catch (const std::exception& e) {
    err << "climssm: error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace climssm::cli
