#include "climssm/timeseries.hpp"

#include <fftw3.h>

#include <algorithm>
#include <charconv>
#include <complex>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

#include "climssm/error.hpp"

namespace climssm {

DailySeries::DailySeries(Date start, std::vector<double> values)
    : start_(start), values_(std::move(values)) {
  if (!start_.ok()) throw DataError("invalid series start date");
  if (values_.size() < 2) throw DataError("a daily series needs at least two days");
}

std::size_t DailySeries::observed_count() const {
  return static_cast<std::size_t>(
      std::count_if(values_.begin(), values_.end(), [](double v) { return !is_missing(v); }));
}

long DailySeries::index_of(const Date& date) const {
  const long i = days_between(start_, date);
  return (i >= 0 && i < static_cast<long>(size())) ? i : -1;
}

DailySeries DailySeries::slice(const Date& first, const Date& last) const {
  const long lo = std::max(0L, days_between(start_, first));
  const long hi = std::min(static_cast<long>(size()) - 1, days_between(start_, last));
  if (hi - lo + 1 < 2) throw DataError("slice " + format_date(first) + ".." + format_date(last) +
                                       " leaves fewer than two days");
  return DailySeries(date_at(static_cast<std::size_t>(lo)),
                     std::vector<double>(values_.begin() + lo, values_.begin() + hi + 1));
}

bool operator==(const DailySeries& a, const DailySeries& b) {
  if (a.start_ != b.start_ || a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a.values_[i], y = b.values_[i];
    if (is_missing(x) != is_missing(y)) return false;
    if (!is_missing(x) && x != y) return false;
  }
  return true;
}

// --- CSV -------------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    out.push_back(trim(line.substr(pos, comma == std::string_view::npos ? line.npos : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

double parse_value(std::string_view s, std::size_t line_no) {
  if (s.empty() || s == "NA" || s == "NaN" || s == "nan") return kMissing;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw DataError("line " + std::to_string(line_no) + ": unparseable value '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

std::string format_double(double v) {
  if (is_missing(v)) return "";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

DailySeries read_csv(std::istream& in, const CsvColumns& columns) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw DataError("empty CSV input");
  ++line_no;
  const auto header = split(line);
  auto find = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("CSV header lacks column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t date_col = find(columns.date);
  const std::size_t value_col = find(columns.value);

  std::map<long, double> rows;  // days since epoch -> value
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    if (fields.size() <= std::max(date_col, value_col)) {
      throw DataError("line " + std::to_string(line_no) + ": too few fields");
    }
    Date d;
    try {
      d = parse_date(fields[date_col]);
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
    const long key = std::chrono::sys_days{d}.time_since_epoch().count();
    if (!rows.emplace(key, parse_value(fields[value_col], line_no)).second) {
      throw DataError("line " + std::to_string(line_no) + ": duplicate date " + format_date(d));
    }
  }
  if (rows.empty()) throw DataError("CSV contains no data rows");
  const long first = rows.begin()->first;
  const long last = rows.rbegin()->first;
  std::vector<double> values(static_cast<std::size_t>(last - first + 1), kMissing);
  for (const auto& [key, v] : rows) values[static_cast<std::size_t>(key - first)] = v;
  const Date start{std::chrono::sys_days{std::chrono::days{first}}};
  return DailySeries(start, std::move(values));
}

DailySeries load_csv(const std::filesystem::path& path, const CsvColumns& columns) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read data file '" + path.string() + "'");
  try {
    return read_csv(in, columns);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_csv(const DailySeries& series, std::ostream& out) {
  out << "date,value\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    out << format_date(series.date_at(i)) << ',' << format_double(series[i]) << '\n';
  }
}

void write_csv(const DailySeries& series, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  write_csv(series, out);
}

// --- harmonic regression -------------------------------------------------

double HarmonicFit::evaluate(long t) const {
  double v = intercept + (with_trend ? slope * static_cast<double>(t) : 0.0);
  for (std::size_t k = 0; k < coefficients.size(); ++k) {
    const double angle = static_cast<double>(k + 1) * kOmega * static_cast<double>(t);
    v += coefficients[k][0] * std::sin(angle) + coefficients[k][1] * std::cos(angle);
  }
  return v;
}

double HarmonicFit::evaluate(const Date& date) const {
  return evaluate(days_between(origin, date) + 1);
}

double HarmonicFit::amplitude(int k) const {
  const auto& c = coefficients.at(static_cast<std::size_t>(k - 1));
  return std::hypot(c[0], c[1]);
}

HarmonicFit fit_harmonics(const DailySeries& series, int harmonics, bool with_trend) {
  if (harmonics < 0) throw std::invalid_argument("harmonic count must be non-negative");
  const int cols = 1 + (with_trend ? 1 : 0) + 2 * harmonics;
  const auto n = static_cast<Eigen::Index>(series.observed_count());
  if (n < 2 * harmonics + 2) {
    throw DataError("harmonic regression needs at least " + std::to_string(2 * harmonics + 2) +
                    " observed values");
  }
  Eigen::MatrixXd design(n, cols);
  Eigen::VectorXd rhs(n);
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series.missing(i)) continue;
    const double t = static_cast<double>(i + 1);
    int c = 0;
    design(row, c++) = 1.0;
    if (with_trend) design(row, c++) = t;
    for (int k = 1; k <= harmonics; ++k) {
      design(row, c++) = std::sin(k * kOmega * t);
      design(row, c++) = std::cos(k * kOmega * t);
    }
    rhs(row++) = series[i];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < cols) throw DataError("harmonic regression design is rank deficient");
  const Eigen::VectorXd beta = qr.solve(rhs);

  HarmonicFit fit;
  fit.origin = series.start();
  fit.with_trend = with_trend;
  int c = 0;
  fit.intercept = beta(c++);
  if (with_trend) fit.slope = beta(c++);
  for (int k = 0; k < harmonics; ++k) {
    fit.coefficients.push_back({beta(c), beta(c + 1)});
    c += 2;
  }
  return fit;
}

DailySeries residualize(const DailySeries& series, const HarmonicFit& fit) {
  const long offset = days_between(fit.origin, series.start());
  std::vector<double> out(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    out[i] = series.missing(i) ? kMissing
                               : series[i] - fit.evaluate(offset + static_cast<long>(i) + 1);
  }
  return DailySeries(series.start(), std::move(out));
}

// --- spectra and correlation ---------------------------------------------

std::vector<SpectrumPoint> periodogram(const DailySeries& series) {
  const std::size_t n = series.size();
  if (n < 4) throw DataError("periodogram needs at least four values");
  if (series.observed_count() != n) throw DataError("periodogram requires a series without missing values");

  const double mu = std::accumulate(series.values().begin(), series.values().end(), 0.0) /
                    static_cast<double>(n);
  std::vector<double> in(n);
  for (std::size_t i = 0; i < n; ++i) in[i] = series[i] - mu;
  std::vector<std::complex<double>> out(n / 2 + 1);

  // plan creation is not thread-safe in FFTW
  static std::mutex plan_mutex;
  fftw_plan plan;
  {
    std::lock_guard lock(plan_mutex);
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(),
                                reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(plan_mutex);
    fftw_destroy_plan(plan);
  }

  std::vector<SpectrumPoint> spectrum;
  spectrum.reserve(n / 2);
  for (std::size_t j = 1; j <= n / 2; ++j) {
    spectrum.push_back({static_cast<double>(j) / static_cast<double>(n),
                        std::norm(out[j]) * 2.0 / static_cast<double>(n)});
  }
  return spectrum;
}

DayMask DayMask::all() {
  DayMask m;
  m.slots_.fill(true);
  return m;
}

DayMask DayMask::months(std::initializer_list<unsigned> months) {
  return DayMask::months(std::span<const unsigned>(months.begin(), months.size()));
}

DayMask DayMask::months(std::span<const unsigned> months) {
  DayMask m;
  // slot layout of a leap year
  const Date leap_jan1{std::chrono::year{2000}, std::chrono::January, std::chrono::day{1}};
  for (int i = 0; i < 366; ++i) {
    const Date d = add_days(leap_jan1, i);
    if (std::find(months.begin(), months.end(), month_of(d)) != months.end()) {
      m.slots_[day_of_year_366(d)] = true;
    }
  }
  return m;
}

namespace {

std::vector<double> acf_impl(const DailySeries& series, int max_lag, const DayMask* mask) {
  if (max_lag < 0) throw std::invalid_argument("max_lag must be non-negative");
  const std::size_t n = series.size();
  // run id per day: -1 when excluded
  std::vector<long> run(n, -1);
  long current = -1;
  bool previous_in = false;
  std::size_t valid = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool in = mask == nullptr || mask->contains(series.date_at(i));
    if (in && !previous_in) ++current;
    previous_in = in;
    if (in && !series.missing(i)) {
      run[i] = current;
      ++valid;
    }
  }
  if (valid < static_cast<std::size_t>(max_lag) + 2) {
    throw DataError("acf needs at least max_lag + 2 valid values");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (run[i] >= 0) sum += series[i];
  }
  const double mu = sum / static_cast<double>(valid);
  std::vector<double> centred(n, 0.0);
  double denom = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (run[i] < 0) continue;
    centred[i] = series[i] - mu;
    denom += centred[i] * centred[i];
  }
  if (!(denom > 0.0)) throw NumericalError("acf of a zero-variance series");

  std::vector<double> r(static_cast<std::size_t>(max_lag) + 1, 0.0);
  r[0] = 1.0;
  for (int k = 1; k <= max_lag; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i + static_cast<std::size_t>(k) < n; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(k);
      if (run[i] >= 0 && run[i] == run[j]) s += centred[i] * centred[j];
    }
    r[static_cast<std::size_t>(k)] = s / denom;
  }
  return r;
}

}  // namespace

std::vector<double> acf(const DailySeries& series, int max_lag) {
  return acf_impl(series, max_lag, nullptr);
}

std::vector<double> acf(const DailySeries& series, int max_lag, const DayMask& mask) {
  return acf_impl(series, max_lag, &mask);
}

std::vector<double> pacf_from_acf(std::span<const double> r) {
  if (r.empty()) throw std::invalid_argument("empty autocorrelation sequence");
  const std::size_t max_lag = r.size() - 1;
  std::vector<double> out(max_lag + 1, 0.0);
  out[0] = 1.0;
  std::vector<double> phi(max_lag + 1, 0.0), prev(max_lag + 1, 0.0);
  double v = 1.0;
  for (std::size_t k = 1; k <= max_lag; ++k) {
    double num = r[k];
    for (std::size_t j = 1; j < k; ++j) num -= prev[j] * r[k - j];
    if (!(v > 1e-14)) throw NumericalError("non-invertible Toeplitz system in Durbin-Levinson");
    const double kappa = num / v;
    phi[k] = kappa;
    for (std::size_t j = 1; j < k; ++j) phi[j] = prev[j] - kappa * prev[k - j];
    v *= (1.0 - kappa * kappa);
    out[k] = kappa;
    prev = phi;
  }
  return out;
}

std::vector<double> pacf(const DailySeries& series, int max_lag) {
  return pacf_from_acf(acf(series, max_lag));
}

std::vector<DoyValue> first_diff_doy_variance(const DailySeries& series) {
  if (series.size() < 3 * 365) throw DataError("day-of-year variance needs at least three years of data");
  std::array<std::vector<double>, 367> diffs;
  for (std::size_t i = 1; i < series.size(); ++i) {
    if (series.missing(i) || series.missing(i - 1)) continue;
    diffs[day_of_year_366(series.date_at(i))].push_back(series[i] - series[i - 1]);
  }
  std::vector<DoyValue> out;
  out.reserve(366);
  for (int d = 1; d <= 366; ++d) {
    const auto& x = diffs[d];
    double var = kMissing;
    if (x.size() >= 2) {
      double m = 0.0;
      for (double v : x) m += v;
      m /= static_cast<double>(x.size());
      double ss = 0.0;
      for (double v : x) ss += (v - m) * (v - m);
      var = ss / static_cast<double>(x.size() - 1);
    }
    out.push_back({d, var});
  }
  return out;
}

}  // namespace climssm
