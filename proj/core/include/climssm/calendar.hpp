#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace climssm {

using Date = std::chrono::year_month_day;

// Parses an ISO-8601 calendar date "YYYY-MM-DD". Throws DataError.
Date parse_date(std::string_view text);
std::string format_date(const Date& date);

Date add_days(const Date& date, long days);
// b - a in days.
long days_between(const Date& a, const Date& b);

// Day of year in a fixed 366-slot layout: 29 Feb is slot 60 and 1 Mar is
// always slot 61, so calendar days keep their slot across leap years.
int day_of_year_366(const Date& date);

inline int year_of(const Date& d) { return static_cast<int>(d.year()); }
inline unsigned month_of(const Date& d) { return static_cast<unsigned>(d.month()); }
inline unsigned day_of(const Date& d) { return static_cast<unsigned>(d.day()); }

// A run of consecutive calendar months, e.g. DJF = {first_month 12, 3 months}.
// A season is labelled by the year of its final month, so DJF 1990 covers
// December 1989 through February 1990.
struct Season {
  std::string label;
  unsigned first_month = 12;
  unsigned months = 3;

  static Season djf() { return {"DJF", 12, 3}; }
  static Season mam() { return {"MAM", 3, 3}; }
  static Season jja() { return {"JJA", 6, 3}; }
  static Season son() { return {"SON", 9, 3}; }
  static std::vector<Season> standard() { return {mam(), jja(), son(), djf()}; }
  // Parses "DJF", "MAM", "JJA", "SON" or "M-N" (first month, month count).
  static Season parse(std::string_view text);

  bool contains_month(unsigned month) const;
  // Label year of the season occurrence containing `date`, if any.
  std::optional<int> label_year(const Date& date) const;
  Date first_day(int label_year) const;
  Date last_day(int label_year) const;
  long length_days(int label_year) const;
};

}  // namespace climssm
