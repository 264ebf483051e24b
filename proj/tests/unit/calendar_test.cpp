#include "doctest.h"

#include "climssm/calendar.hpp"
#include "climssm/error.hpp"

using namespace climssm;
namespace chr = std::chrono;

TEST_CASE("dates parse strictly and format back") {
  const Date d = parse_date("1948-01-01");
  CHECK(year_of(d) == 1948);
  CHECK(month_of(d) == 1);
  CHECK(day_of(d) == 1);
  CHECK(format_date(d) == "1948-01-01");
  CHECK_THROWS_AS(parse_date("1948-1-01"), DataError);
  CHECK_THROWS_AS(parse_date("1947-02-29"), DataError);
  CHECK_THROWS_AS(parse_date("1948-13-01"), DataError);
  CHECK_THROWS_AS(parse_date("1948-01-01x"), DataError);
}

TEST_CASE("day arithmetic") {
  const Date a = parse_date("1948-01-01");
  const Date b = parse_date("2017-12-31");
  CHECK(days_between(a, b) + 1 == 25568);
  CHECK(add_days(a, 59) == parse_date("1948-02-29"));
  CHECK(days_between(b, a) == -25567);
}

TEST_CASE("366-slot day of year keeps March fixed") {
  CHECK(day_of_year_366(parse_date("2001-01-01")) == 1);
  CHECK(day_of_year_366(parse_date("2000-02-29")) == 60);
  CHECK(day_of_year_366(parse_date("2000-03-01")) == 61);
  CHECK(day_of_year_366(parse_date("2001-03-01")) == 61);
  CHECK(day_of_year_366(parse_date("2001-12-31")) == 366);
}

TEST_CASE("seasons are labelled by the year of their final month") {
  const Season djf = Season::djf();
  CHECK(djf.label_year(parse_date("1989-12-15")) == 1990);
  CHECK(djf.label_year(parse_date("1990-02-28")) == 1990);
  CHECK_FALSE(djf.label_year(parse_date("1990-03-01")).has_value());
  CHECK(djf.first_day(1990) == parse_date("1989-12-01"));
  CHECK(djf.last_day(1992) == parse_date("1992-02-29"));
  CHECK(djf.length_days(1992) == 91);
  CHECK(djf.length_days(1991) == 90);
  CHECK(Season::mam().length_days(2000) == 92);
  const Season custom = Season::parse("11-5");
  CHECK(custom.first_month == 11);
  CHECK(custom.months == 5);
  CHECK(custom.contains_month(3));
  CHECK_FALSE(custom.contains_month(4));
  CHECK(Season::parse("SON").first_month == 9);
  CHECK_THROWS(Season::parse("XYZ"));
}
