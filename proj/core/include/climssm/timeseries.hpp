#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "climssm/calendar.hpp"

namespace climssm {

// Angular frequency of the annual cycle in radians per day.
inline constexpr double kOmega = 2.0 * 3.14159265358979323846 / 365.25;

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) { return std::isnan(v); }

// Consecutive calendar days starting at `start`; missing days hold NaN.
// Day index t = 1 refers to values()[0].
class DailySeries {
 public:
  DailySeries(Date start, std::vector<double> values);

  const Date& start() const { return start_; }
  Date end() const { return date_at(size() - 1); }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  bool missing(std::size_t i) const { return is_missing(values_[i]); }
  std::size_t observed_count() const;

  Date date_at(std::size_t i) const { return add_days(start_, static_cast<long>(i)); }
  // Zero-based position of `date`; -1 when outside the series.
  long index_of(const Date& date) const;

  // Sub-series [first, last] (inclusive dates, clipped to the series).
  DailySeries slice(const Date& first, const Date& last) const;

  friend bool operator==(const DailySeries&, const DailySeries&);

 private:
  Date start_;
  std::vector<double> values_;
};

struct CsvColumns {
  std::string date = "date";
  std::string value = "value";
};

// Reads a date/value CSV with a header row. Rows may be in any order;
// days absent inside the spanned range become missing entries.
DailySeries load_csv(const std::filesystem::path& path, const CsvColumns& columns = {});
DailySeries read_csv(std::istream& in, const CsvColumns& columns = {});
void write_csv(const DailySeries& series, std::ostream& out);
void write_csv(const DailySeries& series, const std::filesystem::path& path);

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

// Least-squares fit of value on {1, t, sin(k w t), cos(k w t)}, t = day index
// counted from `origin` (day 1 = origin).
struct HarmonicFit {
  Date origin;
  double intercept = 0.0;
  double slope = 0.0;  // hPa per day
  bool with_trend = true;
  std::vector<std::array<double, 2>> coefficients;  // (a_k sin, b_k cos)

  int harmonics() const { return static_cast<int>(coefficients.size()); }
  double evaluate(long t) const;
  double evaluate(const Date& date) const;
  double amplitude(int k) const;  // k = 1..K
};

HarmonicFit fit_harmonics(const DailySeries& series, int harmonics, bool with_trend);
DailySeries residualize(const DailySeries& series, const HarmonicFit& fit);

struct SpectrumPoint {
  double frequency;  // cycles per day
  double power;
};
// One-sided raw periodogram: |DFT_j|^2 * 2 / N at j / N, j = 1..N/2, after
// mean removal.
std::vector<SpectrumPoint> periodogram(const DailySeries& series);

// Selects calendar days in the 366-slot day-of-year layout.
class DayMask {
 public:
  static DayMask all();
  static DayMask months(std::initializer_list<unsigned> months);
  static DayMask months(std::span<const unsigned> months);
  bool contains(const Date& date) const { return slots_[day_of_year_366(date)]; }

 private:
  std::array<bool, 367> slots_{};
};

// Sample autocorrelation r_0..r_max_lag using the common (lag-0) denominator.
// With a mask, only days inside the mask contribute and a lag pair counts
// only when both days lie in the same contiguous run of masked days.
std::vector<double> acf(const DailySeries& series, int max_lag);
std::vector<double> acf(const DailySeries& series, int max_lag, const DayMask& mask);
// Partial autocorrelation by Durbin-Levinson; result[k] is lag k, result[0] = 1.
std::vector<double> pacf_from_acf(std::span<const double> acf);
std::vector<double> pacf(const DailySeries& series, int max_lag);

struct DoyValue {
  int doy;          // 1..366
  double variance;  // NaN when fewer than two valid differences
};
// Across-year sample variance of y_t - y_{t-1} per day of year.
std::vector<DoyValue> first_diff_doy_variance(const DailySeries& series);

}  // namespace climssm
