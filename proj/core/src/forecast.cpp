#include "climssm/forecast.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <Eigen/QR>

#include "climssm/error.hpp"
#include "climssm/ssm.hpp"
#include "climssm/stats.hpp"

namespace climssm::forecast {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Pairs with both values finite.
void finite_pairs(const std::vector<double>& a, const std::vector<double>& b, std::vector<double>& x,
                  std::vector<double>& y) {
  x.clear();
  y.clear();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::isfinite(a[i]) && std::isfinite(b[i])) {
      x.push_back(a[i]);
      y.push_back(b[i]);
    }
  }
}

double mean_of(const std::vector<double>& v) {
  stats::CompensatedSum s;
  for (double x : v) s.add(x);
  return s.value() / static_cast<double>(v.size());
}

}  // namespace

std::vector<int> ForecastSet::year_list() const {
  std::vector<int> out;
  for (const auto& y : years) out.push_back(y.year);
  return out;
}

std::vector<double> ForecastSet::ensemble_means() const {
  std::vector<double> out;
  for (const auto& y : years) out.push_back(mean_of(y.members));
  return out;
}

std::vector<double> ForecastSet::observed() const {
  std::vector<double> out;
  for (const auto& y : years) out.push_back(y.observed);
  return out;
}

void ForecastSet::validate() const {
  for (std::size_t i = 0; i < years.size(); ++i) {
    if (years[i].members.size() < 2) throw std::invalid_argument("a forecast needs at least two members");
    if (i > 0 && years[i].year <= years[i - 1].year) throw std::invalid_argument("forecast years must increase");
  }
}

PointForecasts to_points(const ForecastSet& set, std::string label) {
  PointForecasts p;
  p.label = std::move(label);
  p.years = set.year_list();
  p.forecast = set.ensemble_means();
  p.observed = set.observed();
  return p;
}

std::vector<double> observed_seasonal_means(const DailySeries& data, const Season& season,
                                            const std::vector<int>& years) {
  std::vector<double> out;
  for (int y : years) {
    const long a = data.index_of(season.first_day(y));
    const long b = data.index_of(season.last_day(y));
    if (a < 0 || b < 0) {
      out.push_back(kNaN);
      continue;
    }
    stats::CompensatedSum s;
    long n = 0;
    for (long i = a; i <= b; ++i) {
      if (!data.missing(static_cast<std::size_t>(i))) {
        s.add(data[static_cast<std::size_t>(i)]);
        ++n;
      }
    }
    out.push_back(n > 0 ? s.value() / static_cast<double>(n) : kNaN);
  }
  return out;
}

// --- model ensembles ---------------------------------------------------------------

ForecastSet seasonal_forecast(const model::ModelConfig& config, const DailySeries& data, const Season& season,
                              const std::vector<int>& years, std::size_t members, std::uint64_t seed,
                              const ForecastOptions& options) {
  if (members < 2) throw std::invalid_argument("a forecast needs at least two members");
  if (years.empty()) throw std::invalid_argument("no forecast years");
  for (std::size_t i = 1; i < years.size(); ++i) {
    if (years[i] <= years[i - 1]) throw std::invalid_argument("forecast years must increase");
  }
  ForecastSet set;
  set.season = season.label;
  std::vector<long> checkpoints;
  for (int y : years) {
    ForecastYear fy;
    fy.year = y;
    fy.init = season.first_day(y);
    const long i = data.index_of(fy.init);
    if (i < 0) {
      throw DataError("initialisation date " + format_date(fy.init) + " is outside the data");
    }
    checkpoints.push_back(i - 1);
    set.years.push_back(std::move(fy));
  }
  const auto observed = observed_seasonal_means(data, season, years);
  for (std::size_t i = 0; i < years.size(); ++i) set.years[i].observed = observed[i];

  const auto fn = config.build(data.start());
  const auto prior = config.state_priors().to_state();
  const auto states = ssm::filter_checkpoints(fn, prior, data.values(), checkpoints);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < set.years.size(); k = next++) {
      try {
        auto& fy = set.years[k];
        const long steps = season.length_days(fy.year);
        const long first_t = checkpoints[k] + 2;
        fy.members.resize(members);
        for (std::size_t m = 0; m < members; ++m) {
          Rng rng = make_stream(seed, static_cast<std::uint64_t>(fy.year), m);
          const Eigen::VectorXd x0 = ssm::draw(states[k], rng);
          const Eigen::VectorXd y = ssm::simulate_path(fn, x0, first_t, steps, rng, nullptr, false);
          stats::CompensatedSum s;
          for (Eigen::Index i = 0; i < y.size(); ++i) s.add(y(i));
          fy.members[m] = s.value() / static_cast<double>(steps);
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(years.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return set;
}

// --- persistence baselines -----------------------------------------------------------

std::vector<double> persistence_linear(const DailySeries& series, int K) {
  if (K < 1) throw std::invalid_argument("persistence window must be at least 1");
  const std::size_t T = series.size();
  std::vector<double> sum(T + 1, 0.0);
  std::vector<long> count(T + 1, 0);
  for (std::size_t i = 0; i < T; ++i) {
    const bool ok = !series.missing(i);
    sum[i + 1] = sum[i] + (ok ? series[i] : 0.0);
    count[i + 1] = count[i] + (ok ? 1 : 0);
  }
  std::vector<double> out(T, kNaN);
  const auto k = static_cast<std::size_t>(K);
  for (std::size_t t = k; t < T; ++t) {
    const long n = count[t] - count[t - k];
    if (n == 0) continue;
    if (n == K) {
      // direct sum keeps the K = 1 case exact
      double s = 0.0;
      for (std::size_t j = t - k; j < t; ++j) s += series[j];
      out[t] = s / K;
    } else {
      out[t] = (sum[t] - sum[t - k]) / static_cast<double>(n);
    }
  }
  return out;
}

std::vector<double> persistence_exponential(const DailySeries& series, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
  std::vector<double> out(series.size(), kNaN);
  double f = kNaN;
  for (std::size_t t = 0; t < series.size(); ++t) {
    if (!series.missing(t)) f = std::isnan(f) ? series[t] : alpha * series[t] + (1.0 - alpha) * f;
    out[t] = f;
  }
  return out;
}

std::string to_string(BaselineKind kind) {
  return kind == BaselineKind::linear ? "linear" : "exponential";
}

std::vector<double> default_grid(BaselineKind kind) {
  std::vector<double> grid;
  if (kind == BaselineKind::linear) {
    for (int k = 1; k <= 120; ++k) grid.push_back(k);
  } else {
    for (int i = 1; i <= 200; ++i) grid.push_back(i / 200.0);
  }
  return grid;
}

BaselineScan optimize_baseline(const DailySeries& data, const Season& season, const std::vector<int>& years,
                               BaselineKind kind, const std::vector<double>& grid) {
  if (grid.empty()) throw std::invalid_argument("baseline grid is empty");
  const HarmonicFit fit = fit_harmonics(data, 2, true);
  const DailySeries resid = residualize(data, fit);
  const auto observed = observed_seasonal_means(data, season, years);

  std::vector<long> init;
  std::vector<double> climatology;
  for (int y : years) {
    init.push_back(data.index_of(season.first_day(y)));
    const Date first = season.first_day(y);
    const long len = season.length_days(y);
    stats::CompensatedSum s;
    for (long i = 0; i < len; ++i) s.add(fit.evaluate(add_days(first, i)));
    climatology.push_back(s.value() / static_cast<double>(len));
  }

  BaselineScan scan;
  scan.kind = kind;
  scan.grid = grid;
  scan.best_correlation = -std::numeric_limits<double>::infinity();
  std::vector<double> xs, ys;
  for (double p : grid) {
    std::vector<double> series;
    long shift = 0;
    if (kind == BaselineKind::linear) {
      const auto K = static_cast<int>(std::lround(p));
      if (K < 1 || std::abs(p - K) > 1e-9) throw std::invalid_argument("linear persistence needs integer K >= 1");
      series = persistence_linear(resid, K);
    } else {
      series = persistence_exponential(resid, p);
      shift = 1;
    }
    PointForecasts f;
    f.label = to_string(kind);
    f.years = years;
    f.observed = observed;
    for (std::size_t k = 0; k < years.size(); ++k) {
      const long i = init[k] - shift;
      const double anomaly = (init[k] < 0 || i < 0) ? kNaN : series[static_cast<std::size_t>(i)];
      f.forecast.push_back(anomaly + climatology[k]);
    }
    finite_pairs(f.forecast, f.observed, xs, ys);
    double r = kNaN;
    if (xs.size() >= 3) {
      try {
        r = stats::correlation(xs, ys);
      } catch (const NumericalError&) {
        r = kNaN;
      }
    }
    scan.correlations.push_back(r);
    if (!std::isnan(r) && r > scan.best_correlation) {
      scan.best_correlation = r;
      scan.best_parameter = p;
      scan.forecasts = std::move(f);
    }
  }
  if (std::isinf(scan.best_correlation)) throw NumericalError("no baseline forecast has a defined correlation");
  return scan;
}

// --- skill -------------------------------------------------------------------------------

Skill skill(const ForecastSet& set) {
  set.validate();
  std::vector<double> f, o;
  int inside = 0;
  for (const auto& y : set.years) {
    if (!std::isfinite(y.observed)) continue;
    f.push_back(mean_of(y.members));
    o.push_back(y.observed);
    const double lo = stats::quantile(y.members, 0.025);
    const double hi = stats::quantile(y.members, 0.975);
    if (y.observed >= lo && y.observed <= hi) ++inside;
  }
  if (f.size() < 3) throw DataError("skill needs at least three verified years");
  Skill s;
  s.years = static_cast<int>(f.size());
  s.correlation = stats::correlation(f, o);
  s.coverage = static_cast<double>(inside) / static_cast<double>(f.size());
  return s;
}

double correlation(const PointForecasts& forecasts) {
  std::vector<double> x, y;
  finite_pairs(forecasts.forecast, forecasts.observed, x, y);
  if (x.size() < 3) throw DataError("correlation needs at least three verified years");
  return stats::correlation(x, y);
}

std::vector<WindowSkill> moving_window_skill(const PointForecasts& forecasts, int window,
                                             const std::vector<std::pair<int, double>>& companion) {
  if (window < 5) throw std::invalid_argument("moving window must span at least 5 years");
  const auto n = static_cast<int>(forecasts.years.size());
  if (n < window) throw DataError("forecast span is shorter than the window");
  std::map<int, double> comp(companion.begin(), companion.end());
  std::vector<WindowSkill> out;
  for (int a = 0; a + window <= n; ++a) {
    const auto first = forecasts.years.begin() + a;
    PointForecasts w;
    w.years.assign(first, first + window);
    w.forecast.assign(forecasts.forecast.begin() + a, forecasts.forecast.begin() + a + window);
    w.observed.assign(forecasts.observed.begin() + a, forecasts.observed.begin() + a + window);
    WindowSkill s;
    s.label_year = w.years.front() + window / 2 - 1;
    s.correlation = correlation(w);
    if (!comp.empty()) {
      std::vector<double> c;
      for (int y : w.years) {
        if (auto it = comp.find(y); it != comp.end()) c.push_back(it->second);
      }
      if (c.size() >= 2) s.companion_sd = stats::sd(c);
    }
    out.push_back(s);
  }
  return out;
}

// --- recalibration and combination ---------------------------------------------------

Combination recalibrate_and_combine(const std::vector<PointForecasts>& sets) {
  if (sets.empty()) throw std::invalid_argument("no forecast sets");
  // common verified years
  std::map<int, std::vector<double>> rows;
  std::map<int, double> obs;
  for (std::size_t s = 0; s < sets.size(); ++s) {
    const auto& p = sets[s];
    for (std::size_t i = 0; i < p.years.size(); ++i) {
      auto& r = rows[p.years[i]];
      r.resize(sets.size(), kNaN);
      r[s] = p.forecast[i];
      if (std::isfinite(p.observed[i])) obs[p.years[i]] = p.observed[i];
    }
  }
  Combination out;
  std::vector<std::vector<double>> x(sets.size());
  std::vector<double> y;
  for (const auto& [year, r] : rows) {
    const auto o = obs.find(year);
    if (o == obs.end() || r.size() != sets.size()) continue;
    if (!std::all_of(r.begin(), r.end(), [](double v) { return std::isfinite(v); })) continue;
    out.years.push_back(year);
    y.push_back(o->second);
    for (std::size_t s = 0; s < sets.size(); ++s) x[s].push_back(r[s]);
  }
  const auto n = static_cast<Eigen::Index>(y.size());
  if (n < 5) throw DataError("recalibration needs at least five common years");
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);

  for (std::size_t s = 0; s < sets.size(); ++s) {
    Recalibrated r;
    r.label = sets[s].label;
    r.raw_correlation = stats::correlation(x[s], y);
    const double vx = stats::variance(x[s]);
    r.slope = stats::covariance(x[s], y) / vx;
    r.intercept = stats::mean(y) - r.slope * stats::mean(x[s]);
    std::vector<double> fitted;
    for (double v : x[s]) fitted.push_back(r.intercept + r.slope * v);
    r.correlation = r.slope == 0.0 ? 0.0 : stats::correlation(fitted, y);
    out.sets.push_back(r);
  }

  // greedy rank check keeps the first of any collinear group
  Eigen::MatrixXd design = Eigen::MatrixXd::Ones(n, 1);
  std::vector<std::size_t> kept;
  for (std::size_t s = 0; s < sets.size(); ++s) {
    Eigen::MatrixXd trial(n, design.cols() + 1);
    trial << design, Eigen::Map<const Eigen::VectorXd>(x[s].data(), n);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(trial);
    qr.setThreshold(1e-10);
    if (qr.rank() == trial.cols()) {
      design = std::move(trial);
      kept.push_back(s);
      out.used.push_back(sets[s].label);
    } else {
      out.dropped.push_back(sets[s].label);
    }
  }
  const Eigen::VectorXd beta = design.colPivHouseholderQr().solve(yv);
  const Eigen::VectorXd fitted = design * beta;
  out.coefficients.assign(beta.data(), beta.data() + beta.size());
  out.combined.assign(fitted.data(), fitted.data() + fitted.size());
  out.correlation = kept.empty() ? 0.0 : stats::correlation(out.combined, y);
  return out;
}

// --- CSV -------------------------------------------------------------------------------

void write_forecast_csv(const ForecastSet& set, std::ostream& out) {
  out << "year,obs,fcst_mean,lo95,hi95\n";
  for (const auto& y : set.years) {
    out << y.year << ',' << format_double(y.observed) << ',' << format_double(mean_of(y.members)) << ','
        << format_double(stats::quantile(y.members, 0.025)) << ','
        << format_double(stats::quantile(y.members, 0.975)) << '\n';
  }
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& text) {
  if (text.empty() || text == "NA" || text == "nan" || text == "NaN") return kNaN;
  std::size_t used = 0;
  const double v = std::stod(text, &used);
  if (used != text.size()) throw DataError("bad number '" + text + "'");
  return v;
}

}  // namespace

std::vector<ForecastCsvRow> read_forecast_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("year,obs,fcst_mean,lo95,hi95", 0) != 0) {
    throw DataError("not a forecast table");
  }
  std::vector<ForecastCsvRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 5) throw DataError("forecast row with " + std::to_string(f.size()) + " fields");
    rows.push_back({std::stoi(f[0]), parse_number(f[1]), parse_number(f[2]), parse_number(f[3]),
                    parse_number(f[4])});
  }
  return rows;
}

PointForecasts read_external_csv(std::istream& in, std::string label) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty external forecast file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line);
  const auto year_col = std::find(header.begin(), header.end(), "year");
  const auto mean_col = std::find(header.begin(), header.end(), "ensemble_mean");
  if (year_col == header.end() || mean_col == header.end()) {
    throw DataError("external forecast file needs year and ensemble_mean columns");
  }
  const auto yc = static_cast<std::size_t>(year_col - header.begin());
  const auto mc = static_cast<std::size_t>(mean_col - header.begin());
  std::map<int, double> values;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() <= std::max(yc, mc)) throw DataError("short row in external forecast file");
    const int year = std::stoi(f[yc]);
    if (!values.emplace(year, parse_number(f[mc])).second) {
      throw DataError("duplicate year " + std::to_string(year) + " in external forecast file");
    }
  }
  PointForecasts p;
  p.label = std::move(label);
  for (const auto& [year, v] : values) {
    p.years.push_back(year);
    p.forecast.push_back(v);
    p.observed.push_back(kNaN);
  }
  return p;
}

PointForecasts load_external_csv(const std::filesystem::path& path, std::string label) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_external_csv(in, std::move(label));
}

}  // namespace climssm::forecast
