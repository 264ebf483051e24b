#include "climssm/analysis.hpp"

#include <algorithm>
#include <cstdio>
#include <atomic>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "climssm/error.hpp"

namespace climssm::analysis {

namespace chr = std::chrono;

std::string component_name(int component) {
  switch (component) {
    case mean: return "mean";
    case seasonal: return "seasonal";
    case weather: return "weather";
    case forced: return "forced";
    case error: return "error";
    default: throw std::out_of_range("component index");
  }
}

std::string anova_component_name(int component) {
  switch (component) {
    case anova_mean: return "mean";
    case anova_external: return "external";
    case anova_weather: return "weather";
    case anova_error: return "error";
    default: throw std::out_of_range("anova component index");
  }
}

ComponentSeries decompose(const ssm::TrajectoryEnsemble& ensemble, const model::StateLayout& layout,
                          const model::InfluenceFunction& fn, const DailySeries& data) {
  if (ensemble.dim() != layout.dim()) throw std::invalid_argument("ensemble does not match the state layout");
  if (ensemble.steps() != static_cast<Eigen::Index>(data.size())) {
    throw std::invalid_argument("ensemble does not match the data length");
  }
  const auto T = static_cast<Eigen::Index>(data.size());
  std::vector<double> lam(data.size(), 0.0);
  if (layout.kind != model::ForcingKind::none) {
    for (std::size_t i = 0; i < data.size(); ++i) lam[i] = fn(data.date_at(i));
  }

  ComponentSeries out;
  out.origin = data.start();
  out.observations.assign(data.values().begin(), data.values().end());
  out.values.reserve(ensemble.members());
  for (const auto& path : ensemble.paths) {
    Eigen::MatrixXd c(T, kComponents);
    for (Eigen::Index i = 0; i < T; ++i) {
      const auto x = path.row(i);
      double season = 0.0;
      for (int k = 1; k <= layout.K; ++k) season += x(layout.psi(k));
      double z = 0.0;
      const double l = lam[static_cast<std::size_t>(i)];
      if (layout.kind == model::ForcingKind::mean_shift) {
        z = l * x(layout.delta());
      } else if (layout.kind == model::ForcingKind::ac_shift) {
        for (int p = 1; p <= layout.P; ++p) z += l * x(layout.delta(p)) * x(layout.lag(p));
      }
      c(i, mean) = x(layout.mu());
      c(i, seasonal) = season;
      c(i, weather) = x(layout.lag(0));
      c(i, forced) = z;
      const double y = data[static_cast<std::size_t>(i)];
      c(i, error) = is_missing(y) ? 0.0 : y - (c(i, mean) + season + c(i, weather) + z);
    }
    out.values.push_back(std::move(c));
  }
  return out;
}

// --- seasonal means and variance table -----------------------------------------

void SeasonalMeans::merge(SeasonalMeans&& other) {
  if (other.years != years || other.season.first_month != season.first_month ||
      other.season.months != season.months) {
    throw std::invalid_argument("seasonal means cover different seasons");
  }
  for (auto& m : other.members) members.push_back(std::move(m));
}

SeasonalMeans seasonal_means(const ComponentSeries& components, const Season& season,
                             std::optional<YearRange> years) {
  const long T = static_cast<long>(components.steps());
  const Date last_date = add_days(components.origin, T - 1);
  // rows of observed days for each fully covered season occurrence
  std::map<int, std::vector<Eigen::Index>> occurrences;
  for (long i = 0; i < T; ++i) {
    const Date d = add_days(components.origin, i);
    const auto label = season.label_year(d);
    if (!label) continue;
    if (years && (*label < years->first || *label > years->last)) continue;
    occurrences[*label];
    if (!is_missing(components.observations[static_cast<std::size_t>(i)])) occurrences[*label].push_back(i);
  }
  SeasonalMeans out;
  out.season = season;
  std::vector<std::vector<Eigen::Index>> index;
  for (auto& [year, idx] : occurrences) {
    if (days_between(components.origin, season.first_day(year)) < 0) continue;
    if (days_between(season.last_day(year), last_date) < 0) continue;
    if (idx.empty()) continue;
    out.years.push_back(year);
    stats::CompensatedSum s;
    for (auto i : idx) s.add(components.observations[static_cast<std::size_t>(i)]);
    out.observed.push_back(s.value() / static_cast<double>(idx.size()));
    index.push_back(std::move(idx));
  }
  const auto Y = static_cast<Eigen::Index>(out.years.size());
  out.members.reserve(components.members());
  for (const auto& c : components.values) {
    Eigen::MatrixXd m(Y, kAnovaComponents);
    for (Eigen::Index y = 0; y < Y; ++y) {
      std::array<stats::CompensatedSum, kAnovaComponents> sums;
      for (auto i : index[static_cast<std::size_t>(y)]) {
        sums[anova_mean].add(c(i, mean));
        sums[anova_mean].add(c(i, seasonal));
        sums[anova_external].add(c(i, forced));
        sums[anova_weather].add(c(i, weather));
        sums[anova_error].add(c(i, error));
      }
      const double n = static_cast<double>(index[static_cast<std::size_t>(y)].size());
      for (int j = 0; j < kAnovaComponents; ++j) m(y, j) = sums[static_cast<std::size_t>(j)].value() / n;
    }
    out.members.push_back(std::move(m));
  }
  return out;
}

AnovaRow anova(const SeasonalMeans& means) {
  const auto Y = static_cast<Eigen::Index>(means.years.size());
  if (Y < 10) throw DataError("variance table needs at least 10 seasons, found " + std::to_string(Y));
  if (means.members.empty()) throw std::invalid_argument("no trajectories");
  AnovaRow row;
  row.season = means.season.label;
  row.seasons = static_cast<int>(Y);
  row.per_trajectory.resize(static_cast<Eigen::Index>(means.members.size()), kAnovaComponents);
  for (std::size_t m = 0; m < means.members.size(); ++m) {
    const Eigen::MatrixXd centred = means.members[m].rowwise() - means.members[m].colwise().mean();
    const Eigen::VectorXd total = centred.rowwise().sum();
    const double var = total.squaredNorm();
    if (!(var > 0.0)) throw NumericalError("zero total variance of seasonal means");
    const auto r = static_cast<Eigen::Index>(m);
    for (int j = 0; j < kAnovaComponents; ++j) row.per_trajectory(r, j) = centred.col(j).dot(total) / var;
  }
  for (int j = 0; j < kAnovaComponents; ++j) {
    const Eigen::VectorXd col = row.per_trajectory.col(j);
    row.fractions[static_cast<std::size_t>(j)] = stats::summarize({col.data(), static_cast<std::size_t>(col.size())});
  }
  return row;
}

AnovaRow anova(const ComponentSeries& components, const Season& season, std::optional<YearRange> years) {
  return anova(seasonal_means(components, season, years));
}

Attribution attribute_years(const SeasonalMeans& means) {
  const auto Y = static_cast<Eigen::Index>(means.years.size());
  if (Y < 2) throw DataError("attribution needs at least two seasons");
  if (means.members.empty()) throw std::invalid_argument("no trajectories");
  Attribution out;
  out.season = means.season.label;
  out.years = means.years;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(Y, kAnovaComponents);
  for (const auto& m : means.members) sum += m.rowwise() - m.colwise().mean();
  out.contributions = sum / static_cast<double>(means.members.size());
  const double obs_mean = stats::mean(means.observed);
  for (double v : means.observed) out.observed_anomaly.push_back(v - obs_mean);
  return out;
}

// --- state summaries ------------------------------------------------------------

ssm::TrajectoryEnsemble thin(const ssm::TrajectoryEnsemble& ensemble, long stride) {
  if (stride < 1) throw std::invalid_argument("stride must be positive");
  ssm::TrajectoryEnsemble out;
  out.coordinate_names = ensemble.coordinate_names;
  const Eigen::Index rows_out = (ensemble.steps() + stride - 1) / stride;
  for (const auto& p : ensemble.paths) {
    Eigen::MatrixXd q(rows_out, p.cols());
    for (Eigen::Index i = 0; i < rows_out; ++i) q.row(i) = p.row(i * stride);
    out.paths.push_back(std::move(q));
  }
  return out;
}

ssm::TrajectoryEnsemble rows(const ssm::TrajectoryEnsemble& ensemble, long first, long count) {
  if (first < 0 || count < 0 || first + count > ensemble.steps()) throw std::out_of_range("row range");
  ssm::TrajectoryEnsemble out;
  out.coordinate_names = ensemble.coordinate_names;
  for (const auto& p : ensemble.paths) out.paths.emplace_back(p.middleRows(first, count));
  return out;
}

namespace {

// Day of year (1-based, counted from 1 January) of the first daily maximum of
// psi cos(k w s) + psi* sin(k w s), s in days after the state's date.
double first_peak_doy(double psi, double psi_star, int k, const Date& date) {
  if (psi == 0.0 && psi_star == 0.0) return std::numeric_limits<double>::quiet_NaN();
  const double kw = k * kOmega;
  const double period = 365.25 / k;
  const auto window = static_cast<long>(std::ceil(period));
  const long s0 = days_between(date, Date{date.year(), chr::January, chr::day{1}});
  auto f = [&](long j) {
    const double s = static_cast<double>(s0 + j);
    return psi * std::cos(kw * s) + psi_star * std::sin(kw * s);
  };
  const double theta = std::atan2(psi_star, psi);
  double u = std::fmod(theta / kw - static_cast<double>(s0), period);
  if (u < 0.0) u += period;
  long best = -1;
  double best_value = -std::numeric_limits<double>::infinity();
  for (long j : {static_cast<long>(std::floor(u)) - 1, static_cast<long>(std::floor(u)),
                 static_cast<long>(std::ceil(u)), static_cast<long>(std::ceil(u)) + 1, 0L, window - 1}) {
    if (j < 0 || j >= window) continue;
    const double v = f(j);
    if (v > best_value || (v == best_value && j < best)) {
      best_value = v;
      best = j;
    }
  }
  return static_cast<double>(best + 1);
}

}  // namespace

ComponentSummaries component_summaries(const ssm::TrajectoryEnsemble& ensemble, const model::StateLayout& layout,
                                       const Date& origin, long stride) {
  if (ensemble.dim() != layout.dim()) throw std::invalid_argument("ensemble does not match the state layout");
  if (stride < 1) throw std::invalid_argument("stride must be positive");
  ComponentSummaries out;
  out.names.push_back("mu");
  for (int k = 1; k <= layout.K; ++k) out.names.push_back("amplitude_" + std::to_string(k));
  for (int k = 1; k <= layout.K; ++k) out.names.push_back("phase_" + std::to_string(k));
  for (int p = 1; p <= layout.P; ++p) out.names.push_back("phi_" + std::to_string(p));
  const std::size_t M = ensemble.members();
  std::vector<std::vector<double>> samples(out.names.size(), std::vector<double>(M));
  for (Eigen::Index i = 0; i < ensemble.steps(); ++i) {
    const Date date = add_days(origin, i * stride);
    for (std::size_t m = 0; m < M; ++m) {
      const auto x = ensemble.paths[m].row(i);
      std::size_t c = 0;
      samples[c++][m] = x(layout.mu());
      for (int k = 1; k <= layout.K; ++k) samples[c++][m] = std::hypot(x(layout.psi(k)), x(layout.psi_star(k)));
      for (int k = 1; k <= layout.K; ++k) {
        samples[c++][m] = first_peak_doy(x(layout.psi(k)), x(layout.psi_star(k)), k, date);
      }
      for (int p = 1; p <= layout.P; ++p) samples[c++][m] = x(layout.phi(p));
    }
    std::vector<stats::Interval> row;
    for (auto& s : samples) {
      std::vector<double> valid;
      for (double v : s) {
        if (!std::isnan(v)) valid.push_back(v);
      }
      if (valid.empty()) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        row.push_back({nan, nan, nan});
      } else {
        row.push_back(stats::summarize(valid));
      }
    }
    out.dates.push_back(date);
    out.rows.push_back(std::move(row));
  }
  return out;
}

BandSeries forcing_evolution(const ssm::TrajectoryEnsemble& ensemble, const model::StateLayout& layout,
                             const Date& origin, int winter) {
  if (layout.kind != model::ForcingKind::mean_shift) {
    throw std::invalid_argument("forcing evolution is defined for the mean-shift model only");
  }
  if (ensemble.dim() != layout.dim()) throw std::invalid_argument("ensemble does not match the state layout");
  const Date first{chr::year{winter - 1}, chr::November, chr::day{1}};
  const Date last{chr::year{winter}, chr::April, chr::day{30}};
  const long i0 = days_between(origin, first);
  const long i1 = days_between(origin, last);
  if (i0 < 0 || i1 >= ensemble.steps()) throw DataError("winter " + std::to_string(winter) + " is outside the trajectories");
  BandSeries out;
  std::vector<double> v(ensemble.members());
  for (long i = i0; i <= i1; ++i) {
    for (std::size_t m = 0; m < ensemble.members(); ++m) v[m] = ensemble.paths[m](i, layout.delta());
    out.dates.push_back(add_days(origin, i));
    out.values.push_back(stats::summarize(v));
  }
  return out;
}

// --- posterior predictive check --------------------------------------------------

namespace {

struct CheckLayout {
  Date first;
  long steps = 0;
  int first_year = 0;
  int years = 0;
};

// Monthly inter-annual SDs (12), then ACF lags 1..max_lag for Dec-Mar and
// Apr-Nov, computed on `values` laid out from `layout.first`.
std::vector<double> check_statistics(const CheckLayout& layout, std::vector<double> values, int max_lag) {
  std::vector<double> out;
  out.reserve(12 + 2 * static_cast<std::size_t>(max_lag));
  std::array<std::vector<stats::CompensatedSum>, 12> sums;
  std::array<std::vector<int>, 12> counts;
  for (auto& s : sums) s.resize(static_cast<std::size_t>(layout.years));
  for (auto& c : counts) c.assign(static_cast<std::size_t>(layout.years), 0);
  for (long i = 0; i < layout.steps; ++i) {
    const double v = values[static_cast<std::size_t>(i)];
    if (is_missing(v)) continue;
    const Date d = add_days(layout.first, i);
    const auto y = static_cast<std::size_t>(year_of(d) - layout.first_year);
    const auto m = month_of(d) - 1;
    sums[m][y].add(v);
    ++counts[m][y];
  }
  for (std::size_t m = 0; m < 12; ++m) {
    std::vector<double> monthly;
    for (std::size_t y = 0; y < sums[m].size(); ++y) {
      if (counts[m][y] > 0) monthly.push_back(sums[m][y].value() / counts[m][y]);
    }
    out.push_back(monthly.size() >= 2 ? stats::sd(monthly) : std::numeric_limits<double>::quiet_NaN());
  }
  const DailySeries series(layout.first, std::move(values));
  const DailySeries resid = residualize(series, fit_harmonics(series, 2, true));
  static const DayMask winter = DayMask::months({12, 1, 2, 3});
  static const DayMask rest = DayMask::months({4, 5, 6, 7, 8, 9, 10, 11});
  for (const DayMask* mask : {&winter, &rest}) {
    const auto r = acf(resid, max_lag, *mask);
    out.insert(out.end(), r.begin() + 1, r.end());
  }
  return out;
}

}  // namespace

int CheckReport::monthly_sd_inside() const {
  int n = 0;
  for (const auto& r : rows) {
    if (r.statistic.rfind("sd_month_", 0) == 0 && r.inside) ++n;
  }
  return n;
}

bool CheckReport::acf_covered(const std::string& period, int max_lag) const {
  const std::string prefix = "acf_" + period + "_lag";
  int seen = 0;
  for (const auto& r : rows) {
    if (r.statistic.rfind(prefix, 0) != 0) continue;
    const int lag = std::stoi(r.statistic.substr(prefix.size()));
    if (lag > max_lag) continue;
    ++seen;
    if (!r.inside) return false;
  }
  return seen == max_lag;
}

CheckReport posterior_predictive_check(const model::ModelConfig& config, const DailySeries& data, int start_year,
                                       std::size_t realizations, std::uint64_t seed, const CheckOptions& options) {
  if (realizations < 2) throw std::invalid_argument("predictive check needs at least two realizations");
  if (options.max_lag < 1) throw std::invalid_argument("max_lag must be positive");
  const Date first{chr::year{start_year}, chr::January, chr::day{1}};
  const long i0 = data.index_of(first);
  if (i0 < 1) throw DataError("predictive check needs data before 1 January " + std::to_string(start_year));
  const Date end = data.end();
  const int last_year = (month_of(end) == 12 && day_of(end) == 31) ? year_of(end) : year_of(end) - 1;
  CheckLayout layout;
  layout.first = first;
  layout.first_year = start_year;
  layout.years = last_year - start_year + 1;
  if (layout.years < options.min_years) {
    throw DataError("predictive check needs " + std::to_string(options.min_years) + " years after " +
                    std::to_string(start_year) + ", found " + std::to_string(std::max(layout.years, 0)));
  }
  layout.steps = days_between(first, Date{chr::year{last_year}, chr::December, chr::day{31}}) + 1;

  const auto fn = config.build(data.start());
  const auto prior = config.state_priors().to_state();
  const std::vector<long> checkpoint{i0 - 1};
  const auto start_state = ssm::filter_checkpoints(fn, prior, data.values(), checkpoint).front();

  std::vector<double> observed(data.values().begin() + i0, data.values().begin() + i0 + layout.steps);
  const auto observed_stats = check_statistics(layout, observed, options.max_lag);
  const std::size_t S = observed_stats.size();

  std::vector<std::vector<double>> sims(realizations);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t r = next++; r < realizations; r = next++) {
      try {
        Rng rng = make_stream(seed, r);
        const Eigen::VectorXd x0 = ssm::draw(start_state, rng);
        const Eigen::VectorXd y = ssm::simulate_path(fn, x0, i0 + 1, layout.steps, rng);
        std::vector<double> v(y.data(), y.data() + y.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
          if (is_missing(observed[i])) v[i] = kMissing;
        }
        sims[r] = check_statistics(layout, std::move(v), options.max_lag);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(realizations)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  CheckReport report;
  report.start_year = start_year;
  report.years = layout.years;
  report.realizations = realizations;
  std::vector<double> column(realizations);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t r = 0; r < realizations; ++r) column[r] = sims[r][s];
    CheckRow row;
    if (s < 12) {
      char name[32];
      std::snprintf(name, sizeof name, "sd_month_%02zu", s + 1);
      row.statistic = name;
    } else {
      const std::size_t j = s - 12;
      const auto lag = j % static_cast<std::size_t>(options.max_lag) + 1;
      const char* period = j < static_cast<std::size_t>(options.max_lag) ? "DJFM" : "AMJJASON";
      char name[64];
      std::snprintf(name, sizeof name, "acf_%s_lag%02zu", period, lag);
      row.statistic = name;
    }
    row.observed = observed_stats[s];
    row.lo = stats::quantile(column, 0.025);
    row.hi = stats::quantile(column, 0.975);
    row.inside = row.observed >= row.lo && row.observed <= row.hi;
    report.rows.push_back(std::move(row));
  }
  return report;
}

// --- CSV -------------------------------------------------------------------------

void write_anova_csv(const std::vector<AnovaRow>& rows, std::ostream& out) {
  out << "season,component,mean,lo,hi\n";
  for (const auto& r : rows) {
    for (int j = 0; j < kAnovaComponents; ++j) {
      const auto& f = r.fractions[static_cast<std::size_t>(j)];
      out << r.season << ',' << anova_component_name(j) << ',' << format_double(f.mean) << ','
          << format_double(f.lo) << ',' << format_double(f.hi) << '\n';
    }
  }
}

void write_attribution_csv(const Attribution& a, std::ostream& out) {
  out << "year,component,hPa\n";
  for (std::size_t y = 0; y < a.years.size(); ++y) {
    const auto r = static_cast<Eigen::Index>(y);
    for (int j = 0; j < kAnovaComponents; ++j) {
      out << a.years[y] << ',' << anova_component_name(j) << ',' << format_double(a.contributions(r, j)) << '\n';
    }
    out << a.years[y] << ",observed," << format_double(a.observed_anomaly[y]) << '\n';
  }
}

void write_summaries_csv(const ComponentSummaries& s, std::ostream& out) {
  out << "date";
  for (const auto& n : s.names) out << ',' << n << ',' << n << "_lo," << n << "_hi";
  out << '\n';
  for (std::size_t i = 0; i < s.dates.size(); ++i) {
    out << format_date(s.dates[i]);
    for (const auto& v : s.rows[i]) {
      out << ',' << format_double(v.mean) << ',' << format_double(v.lo) << ',' << format_double(v.hi);
    }
    out << '\n';
  }
}

void write_band_csv(const BandSeries& band, std::ostream& out) {
  out << "date,mean,lo,hi\n";
  for (std::size_t i = 0; i < band.dates.size(); ++i) {
    const auto& v = band.values[i];
    out << format_date(band.dates[i]) << ',' << format_double(v.mean) << ',' << format_double(v.lo) << ','
        << format_double(v.hi) << '\n';
  }
}

void write_check_csv(const CheckReport& report, std::ostream& out) {
  out << "statistic,observed,lo,hi,inside\n";
  for (const auto& r : report.rows) {
    out << r.statistic << ',' << format_double(r.observed) << ',' << format_double(r.lo) << ','
        << format_double(r.hi) << ',' << (r.inside ? 1 : 0) << '\n';
  }
}

std::vector<AnovaCsvRow> read_anova_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("season,component,mean,lo,hi", 0) != 0) {
    throw DataError("not an anova table");
  }
  std::vector<AnovaCsvRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    AnovaCsvRow r;
    std::string field;
    std::getline(ss, r.season, ',');
    std::getline(ss, r.component, ',');
    std::getline(ss, field, ',');
    r.mean = std::stod(field);
    std::getline(ss, field, ',');
    r.lo = std::stod(field);
    std::getline(ss, field, ',');
    r.hi = std::stod(field);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace climssm::analysis
