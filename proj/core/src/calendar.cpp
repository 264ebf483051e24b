#include "climssm/calendar.hpp"

#include <charconv>
#include <cstdio>

#include "climssm/error.hpp"

namespace climssm {

namespace chr = std::chrono;

namespace {

int parse_int(std::string_view s, std::string_view whole) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw DataError("unparseable date '" + std::string(whole) + "'");
  }
  return v;
}

}  // namespace

Date parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    throw DataError("unparseable date '" + std::string(text) + "'");
  }
  const int y = parse_int(text.substr(0, 4), text);
  const int m = parse_int(text.substr(5, 2), text);
  const int d = parse_int(text.substr(8, 2), text);
  Date date{chr::year{y}, chr::month{static_cast<unsigned>(m)},
            chr::day{static_cast<unsigned>(d)}};
  if (!date.ok()) throw DataError("invalid calendar date '" + std::string(text) + "'");
  return date;
}

std::string format_date(const Date& date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year_of(date), month_of(date),
                day_of(date));
  return buf;
}

Date add_days(const Date& date, long days) {
  return Date{chr::sys_days{date} + chr::days{days}};
}

long days_between(const Date& a, const Date& b) {
  return (chr::sys_days{b} - chr::sys_days{a}).count();
}

int day_of_year_366(const Date& date) {
  static constexpr int kCumulative[12] = {0, 31, 60, 91, 121, 152, 182, 213, 244, 274, 305, 335};
  return kCumulative[month_of(date) - 1] + static_cast<int>(day_of(date));
}

Season Season::parse(std::string_view text) {
  for (const auto& s : standard()) {
    if (text == s.label) return s;
  }
  const auto dash = text.find('-');
  if (dash != std::string_view::npos) {
    unsigned first = 0, count = 0;
    auto a = std::from_chars(text.data(), text.data() + dash, first);
    auto b = std::from_chars(text.data() + dash + 1, text.data() + text.size(), count);
    if (a.ec == std::errc{} && b.ec == std::errc{} && first >= 1 && first <= 12 &&
        count >= 1 && count <= 12) {
      return {std::string(text), first, count};
    }
  }
  throw ConfigError("unknown season '" + std::string(text) + "'");
}

bool Season::contains_month(unsigned month) const {
  return (month + 12 - first_month) % 12 < months;
}

std::optional<int> Season::label_year(const Date& date) const {
  const unsigned m = month_of(date);
  if (!contains_month(m)) return std::nullopt;
  const unsigned last_month_unwrapped = first_month + months - 1;
  int year = year_of(date);
  // months before the wrap point belong to a season ending next year
  if (last_month_unwrapped > 12 && m >= first_month) ++year;
  return year;
}

Date Season::first_day(int label_year) const {
  const unsigned last_month_unwrapped = first_month + months - 1;
  const int year = last_month_unwrapped > 12 ? label_year - 1 : label_year;
  return Date{chr::year{year}, chr::month{first_month}, chr::day{1}};
}

Date Season::last_day(int label_year) const {
  const unsigned last = (first_month + months - 2) % 12 + 1;
  return Date{chr::year_month_day_last{chr::year{label_year}, chr::month_day_last{chr::month{last}}}};
}

long Season::length_days(int label_year) const {
  return days_between(first_day(label_year), last_day(label_year)) + 1;
}

}  // namespace climssm
