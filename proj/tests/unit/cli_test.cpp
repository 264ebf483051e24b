#include "doctest.h"

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "cli/cli.hpp"
#include "climssm/analysis.hpp"
#include "climssm/estimation.hpp"
#include "climssm/forecast.hpp"
#include "synthetic.hpp"

using namespace climssm;
using model::ForcingKind;
using model::ModelConfig;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("climssm_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Invocation {
  int code;
  std::string err;
};

Invocation invoke(const std::string& args, const fs::path& dir) {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string(CLIMSSM_CLI_EXE) + ' ' + args + " >/dev/null 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

fs::path write_series(const DailySeries& s, const fs::path& dir) {
  const fs::path p = dir / "data.csv";
  write_csv(s, p);
  return p;
}

ModelConfig small_config(ForcingKind kind) {
  ModelConfig c;
  c.layout = {1, 2, kind};
  c.priors.phi_means = {0.8, -0.1};
  c.priors.phi.variance = 0.01;
  return c;
}

DailySeries small_data(std::uint64_t seed, long days) {
  const auto c = small_config(ForcingKind::mean_shift);
  testing::TruthState truth;
  truth.phi = {0.8, -0.1};
  return testing::simulate_series(c, parse_date("2000-01-01"), days, seed, testing::truth_vector(c.layout, truth));
}

std::map<std::string, std::string> key_values(const fs::path& path) {
  std::map<std::string, std::string> kv;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return kv;
}

}  // namespace

TEST_CASE("explore writes its tables and plot") {
  const fs::path dir = scratch("explore");
  ModelConfig c;
  c.layout.kind = ForcingKind::none;
  const auto data = testing::simulate_series(c, parse_date("1980-01-01"), 365L * 30, 3);
  cli::RunConfig cfg;
  cfg.data = write_series(data, dir);
  cfg.out = dir / "out";
  const auto files = cli::cmd_explore(cfg);
  CHECK(files.size() == 5);
  for (const auto& f : files) CHECK(fs::file_size(f) > 0);

  // weather follows an AR(6) whose last coefficients are tiny
  std::ifstream in(cfg.out / "pacf.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "lag,pacf");
  double lag1 = 0.0, beyond = 0.0;
  while (std::getline(in, line)) {
    const int lag = std::stoi(line.substr(0, line.find(',')));
    const double v = std::stod(line.substr(line.find(',') + 1));
    if (lag == 1) lag1 = v;
    if (lag >= 7) beyond = std::max(beyond, std::abs(v));
  }
  CHECK(lag1 > 0.6);
  CHECK(beyond < 0.05);
}

TEST_CASE("fit writes a report whose BIC is consistent") {
  const fs::path dir = scratch("fit");
  cli::RunConfig cfg;
  cfg.data = write_series(small_data(5, 4 * 365), dir);
  cfg.config = dir / "model.cfg";
  model::save_config(small_config(ForcingKind::mean_shift), cfg.config);
  cfg.out = dir / "out";
  bool converged = false;
  const auto files = cli::cmd_fit(cfg, &converged);
  CHECK(converged);
  std::ifstream in(files.front());
  const auto r = estimation::read_report(in);
  CHECK(r.status == "converged");
  CHECK(r.n == 4 * 365);
  CHECK(r.k == 9);
  CHECK(r.bic == doctest::Approx(estimation::bic(r.k, r.n, r.log_likelihood)).epsilon(1e-12));
  const auto fitted = model::load_config(files.back());
  CHECK(fitted.layout == small_config(ForcingKind::mean_shift).layout);
}

TEST_CASE("select ranks a reduced grid reproducibly") {
  const fs::path dir = scratch("select");
  cli::RunConfig cfg;
  cfg.data = write_series(small_data(6, 3 * 365), dir);
  cfg.config = dir / "model.cfg";
  model::save_config(small_config(ForcingKind::mean_shift), cfg.config);
  cfg.lengths = {90, 150};
  cfg.start_months = {11, 12};
  cfg.out = dir / "a";
  cli::cmd_select(cfg);
  cfg.out = dir / "b";
  const auto files = cli::cmd_select(cfg);
  const std::string csv = slurp(files.front());
  CHECK(csv == slurp(dir / "a" / "grid.csv"));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 * 4 + 1);
  CHECK(csv.find(",none,") != std::string::npos);
  CHECK(fs::file_size(files.back()) > 0);
}

TEST_CASE("analyze and forecast are reproducible") {
  const fs::path dir = scratch("pipeline");
  ModelConfig c;
  c.priors.phi_means = testing::nao_like_phi(6);
  c.priors.phi.variance = 0.01;
  const auto data = testing::simulate_series(c, parse_date("1990-01-01"), 365L * 12 + 3, 8);
  cli::RunConfig cfg;
  cfg.data = write_series(data, dir);
  cfg.config = dir / "model.cfg";
  model::save_config(c, cfg.config);
  cfg.members = 12;
  cfg.batch = 5;
  cfg.seed = 11;
  cfg.forecast_from = 1993;
  cfg.window = 5;

  std::map<std::string, std::string> first;
  for (const char* run : {"a", "b"}) {
    cfg.out = dir / run;
    auto files = cli::cmd_analyze(cfg);
    const auto more = cli::cmd_forecast(cfg);
    files.insert(files.end(), more.begin(), more.end());
    for (const auto& f : files) {
      const std::string name = f.filename().string();
      if (first.count(name)) {
        CHECK_MESSAGE(first[name] == slurp(f), name);
      } else {
        first[name] = slurp(f);
      }
    }
  }
  CHECK(first.count("anova.csv") == 1);
  CHECK(first.count("forecast_DJF.csv") == 1);
  CHECK(first.count("forcing_2001.csv") == 1);
  CHECK(first.count("check.csv") == 0);  // twelve years are too few for the check

  std::istringstream anova_in(first["anova.csv"]);
  const auto rows = analysis::read_anova_csv(anova_in);
  CHECK(rows.size() == 16);
  std::map<std::string, double> sums;
  for (const auto& r : rows) sums[r.season] += r.mean;
  for (const auto& [season, total] : sums) CHECK_MESSAGE(total == doctest::Approx(1.0).epsilon(1e-10), season);

  std::istringstream fcst_in(first["forecast_DJF.csv"]);
  CHECK(forecast::read_forecast_csv(fcst_in).size() == 9);
  const auto kv = key_values(dir / "a" / "skill.txt");
  CHECK(kv.count("DJF.baseline.linear.K") == 1);
  CHECK(kv.count("DJF.baseline.exponential.alpha") == 1);
  CHECK(kv.count("SON.correlation") == 1);
}

TEST_CASE("simulate writes loadable series") {
  const fs::path dir = scratch("simulate");
  cli::RunConfig cfg;
  cfg.out = dir;
  cfg.days = 400;
  cfg.paths = 2;
  cfg.write_states = true;
  const auto files = cli::cmd_simulate(cfg);
  REQUIRE(files.size() == 4);
  const auto s = load_csv(files[0]);
  CHECK(s.size() == 400);
  CHECK(s.start() == parse_date("1950-01-01"));
  CHECK(s.observed_count() == 400);
  CHECK(slurp(files[0]) != slurp(files[2]));
}

TEST_CASE("exit codes") {
  const fs::path dir = scratch("exit");
  SUBCASE("missing data file names the path") {
    const auto r = invoke("explore --data " + (dir / "absent.csv").string() + " --out " + dir.string(), dir);
    CHECK(r.code == cli::exit_data);
    CHECK(r.err.find("absent.csv") != std::string::npos);
  }
  SUBCASE("unknown option") {
    CHECK(invoke("explore --bogus", dir).code == cli::exit_usage);
  }
  SUBCASE("no subcommand") {
    CHECK(invoke("--seed 3", dir).code == cli::exit_usage);
  }
  SUBCASE("unknown config key") {
    std::ofstream(dir / "bad.cfg") << "W_XX = 1\n";
    const auto r = invoke("simulate --days 10 --config " + (dir / "bad.cfg").string() + " --out " + dir.string(), dir);
    CHECK(r.code == cli::exit_usage);
    CHECK(r.err.find("W_XX") != std::string::npos);
  }
  SUBCASE("help") {
    CHECK(invoke("--help", dir).code == cli::exit_ok);
  }
  SUBCASE("simulate through the executable") {
    const auto r = invoke("simulate --days 30 --seed 4 --out " + dir.string(), dir);
    CHECK(r.code == cli::exit_ok);
    CHECK(load_csv(dir / "simulated.csv").size() == 30);
  }
}
