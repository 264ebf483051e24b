#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "climssm/calendar.hpp"
#include "climssm/model.hpp"
#include "climssm/timeseries.hpp"

namespace climssm::forecast {

struct ForecastYear {
  int year = 0;
  Date init;
  std::vector<double> members;  // seasonal means per member, hPa
  double observed = kMissing;   // verifying seasonal mean, NaN when unavailable
};

// Ensemble seasonal-mean forecasts initialised on the first day of a season.
struct ForecastSet {
  std::string season;
  std::vector<ForecastYear> years;

  std::vector<int> year_list() const;
  std::vector<double> ensemble_means() const;
  std::vector<double> observed() const;
  void validate() const;
};

// Deterministic forecasts (baselines, external sets, recalibrated series).
struct PointForecasts {
  std::string label;
  std::vector<int> years;
  std::vector<double> forecast;
  std::vector<double> observed;
};

PointForecasts to_points(const ForecastSet& set, std::string label = "model");

// Mean over the observed days of each season occurrence; NaN when the season
// is not fully inside the data or has no observed day.
std::vector<double> observed_seasonal_means(const DailySeries& data, const Season& season,
                                            const std::vector<int>& years);

struct ForecastOptions {
  unsigned threads = 1;
};

// Filters the data to the day before each initialisation, then simulates
// `members` paths through the season and averages the noiseless observation
// signal. Member m of year y draws from make_stream(seed, y, m).
ForecastSet seasonal_forecast(const model::ModelConfig& config, const DailySeries& data, const Season& season,
                              const std::vector<int>& years, std::size_t members, std::uint64_t seed,
                              const ForecastOptions& options = {});

// Mean of the previous K values (missing values skipped); NaN while fewer
// than K earlier days exist or none of them is observed.
std::vector<double> persistence_linear(const DailySeries& deseasonalized, int K);
// F_1 = Y_1, F_t = alpha Y_t + (1 - alpha) F_{t-1}; a missing Y_t keeps F_{t-1}.
std::vector<double> persistence_exponential(const DailySeries& deseasonalized, double alpha);

enum class BaselineKind { linear, exponential };
std::string to_string(BaselineKind kind);

struct BaselineScan {
  BaselineKind kind = BaselineKind::linear;
  std::vector<double> grid;
  std::vector<double> correlations;  // NaN where undefined
  double best_parameter = 0.0;
  double best_correlation = 0.0;
  PointForecasts forecasts;          // at the best parameter
};

std::vector<double> default_grid(BaselineKind kind);

// Persistence forecasts of the seasonal mean issued at each season's
// initialisation: the persisted anomaly of the K=2 harmonic-plus-trend
// residuals plus the fitted curve's season mean. In-sample scan over `grid`.
BaselineScan optimize_baseline(const DailySeries& data, const Season& season, const std::vector<int>& years,
                               BaselineKind kind, const std::vector<double>& grid);

struct Skill {
  double correlation = 0.0;
  double coverage = 0.0;  // fraction of years inside the 2.5-97.5% member interval
  int years = 0;
};

Skill skill(const ForecastSet& set);
double correlation(const PointForecasts& forecasts);

struct WindowSkill {
  int label_year = 0;  // first year + window / 2 - 1
  double correlation = 0.0;
  double companion_sd = kMissing;
};

// Correlation in sliding windows of `window` consecutive forecast years;
// `companion` gives yearly values whose windowed SD is reported alongside.
std::vector<WindowSkill> moving_window_skill(const PointForecasts& forecasts, int window,
                                             const std::vector<std::pair<int, double>>& companion = {});

struct Recalibrated {
  std::string label;
  double raw_correlation = 0.0;
  double intercept = 0.0;
  double slope = 0.0;
  double correlation = 0.0;
};

struct Combination {
  std::vector<int> years;
  std::vector<Recalibrated> sets;
  std::vector<std::string> used;     // predictors kept in the combination
  std::vector<std::string> dropped;  // predictors dropped as collinear
  std::vector<double> coefficients;  // intercept, then one per kept predictor
  std::vector<double> combined;
  double correlation = 0.0;
};

// Simple regression of the observations on each set (recalibration) and a
// multiple regression on all sets (combination), over the common years.
Combination recalibrate_and_combine(const std::vector<PointForecasts>& sets);

// year,obs,fcst_mean,lo95,hi95
void write_forecast_csv(const ForecastSet& set, std::ostream& out);
struct ForecastCsvRow {
  int year = 0;
  double obs = 0.0;
  double fcst_mean = 0.0;
  double lo95 = 0.0;
  double hi95 = 0.0;
};
std::vector<ForecastCsvRow> read_forecast_csv(std::istream& in);

// External ensemble means with columns year,ensemble_mean.
PointForecasts read_external_csv(std::istream& in, std::string label = "external");
PointForecasts load_external_csv(const std::filesystem::path& path, std::string label = "external");

}  // namespace climssm::forecast
