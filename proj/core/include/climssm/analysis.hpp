#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "climssm/calendar.hpp"
#include "climssm/model.hpp"
#include "climssm/ssm.hpp"
#include "climssm/stats.hpp"
#include "climssm/timeseries.hpp"

namespace climssm::analysis {

// Per-day components of each sampled trajectory.
enum Component : int { mean = 0, seasonal = 1, weather = 2, forced = 3, error = 4 };
inline constexpr int kComponents = 5;
std::string component_name(int component);

struct ComponentSeries {
  Date origin;                      // date of row 0
  std::vector<double> observations;  // NaN on missing days
  std::vector<Eigen::MatrixXd> values;  // per member: T x kComponents

  std::size_t members() const { return values.size(); }
  std::size_t steps() const { return observations.size(); }
};

// Splits each trajectory into mean, seasonal, weather, forced and error
// parts; error = y - (others) on observed days and 0 on missing days.
ComponentSeries decompose(const ssm::TrajectoryEnsemble& ensemble, const model::StateLayout& layout,
                          const model::InfluenceFunction& fn, const DailySeries& data);

struct YearRange {
  int first;
  int last;
};

// Components entering the variance table; the seasonal cycle is folded
// into "mean".
enum AnovaComponent : int { anova_mean = 0, anova_external = 1, anova_weather = 2, anova_error = 3 };
inline constexpr int kAnovaComponents = 4;
std::string anova_component_name(int component);

// Seasonal means over the observed days of each season occurrence, per
// member. Batches of members from the same data merge by concatenation.
struct SeasonalMeans {
  Season season;
  std::vector<int> years;
  std::vector<double> observed;           // observed seasonal mean per year
  std::vector<Eigen::MatrixXd> members;   // per member: years x kAnovaComponents

  void merge(SeasonalMeans&& other);
};

SeasonalMeans seasonal_means(const ComponentSeries& components, const Season& season,
                             std::optional<YearRange> years = std::nullopt);

struct AnovaRow {
  std::string season;
  int seasons = 0;
  std::array<stats::Interval, kAnovaComponents> fractions;
  Eigen::MatrixXd per_trajectory;  // members x kAnovaComponents
};

// Covariance shares Cov(c, total) / Var(total) across years per trajectory,
// summarised by the ensemble mean and 2.5% / 97.5% quantiles.
AnovaRow anova(const SeasonalMeans& means);
AnovaRow anova(const ComponentSeries& components, const Season& season,
               std::optional<YearRange> years = std::nullopt);

// Posterior-mean contribution of each component to every seasonal-mean
// anomaly (seasonal mean minus its across-year average).
struct Attribution {
  std::string season;
  std::vector<int> years;
  std::vector<double> observed_anomaly;
  Eigen::MatrixXd contributions;  // years x kAnovaComponents
};

Attribution attribute_years(const SeasonalMeans& means);

// Ensemble bands of state summaries: mu, amplitude_k, phase_k (day of year
// of the first peak, NaN when the amplitude is zero) and phi_p.
struct ComponentSummaries {
  std::vector<std::string> names;
  std::vector<Date> dates;
  std::vector<std::vector<stats::Interval>> rows;  // per date, per name
};

// `origin` is the date of ensemble row 0 and consecutive rows are `stride`
// days apart.
ComponentSummaries component_summaries(const ssm::TrajectoryEnsemble& ensemble, const model::StateLayout& layout,
                                       const Date& origin, long stride = 1);

// Every `stride`-th row of each path, starting at row 0.
ssm::TrajectoryEnsemble thin(const ssm::TrajectoryEnsemble& ensemble, long stride);
// Rows [first, first + count) of each path.
ssm::TrajectoryEnsemble rows(const ssm::TrajectoryEnsemble& ensemble, long first, long count);

struct BandSeries {
  std::vector<Date> dates;
  std::vector<stats::Interval> values;
};

// Daily ensemble mean and 95% band of delta from 1 November of `winter - 1`
// through 30 April of `winter`. Mean-shift layouts only.
BandSeries forcing_evolution(const ssm::TrajectoryEnsemble& ensemble, const model::StateLayout& layout,
                             const Date& origin, int winter);

struct CheckOptions {
  int max_lag = 30;
  int min_years = 20;
  unsigned threads = 1;
};

struct CheckRow {
  std::string statistic;
  double observed = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  bool inside = false;
};

struct CheckReport {
  int start_year = 0;
  int years = 0;
  std::size_t realizations = 0;
  std::vector<CheckRow> rows;

  int monthly_sd_inside() const;
  // True when the observed ACF lies inside the band at every lag 1..max_lag
  // for the given period ("DJFM" or "AMJJASON").
  bool acf_covered(const std::string& period, int max_lag) const;
};

// Filters the data up to 1 January of `start_year`, simulates `realizations`
// paths of the remaining span and compares monthly inter-annual standard
// deviations and within-period autocorrelations with the observations.
CheckReport posterior_predictive_check(const model::ModelConfig& config, const DailySeries& data, int start_year,
                                       std::size_t realizations, std::uint64_t seed,
                                       const CheckOptions& options = {});

// CSV writers: anova (season,component,mean,lo,hi), attribution
// (year,component,hPa), check (statistic,observed,lo,hi,inside).
void write_anova_csv(const std::vector<AnovaRow>& rows, std::ostream& out);
void write_attribution_csv(const Attribution& attribution, std::ostream& out);
void write_summaries_csv(const ComponentSummaries& summaries, std::ostream& out);
void write_band_csv(const BandSeries& band, std::ostream& out);
void write_check_csv(const CheckReport& report, std::ostream& out);

struct AnovaCsvRow {
  std::string season;
  std::string component;
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};
std::vector<AnovaCsvRow> read_anova_csv(std::istream& in);

}  // namespace climssm::analysis
