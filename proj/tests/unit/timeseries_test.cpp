#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "climssm/error.hpp"
#include "climssm/random.hpp"
#include "climssm/timeseries.hpp"
#include "synthetic.hpp"

using namespace climssm;

namespace {

DailySeries from_function(const Date& start, long n, auto&& f) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (long t = 1; t <= n; ++t) v[static_cast<std::size_t>(t - 1)] = f(t);
  return DailySeries(start, std::move(v));
}

std::vector<double> white_noise(std::size_t n, std::uint64_t seed) {
  Rng rng = make_stream(seed, 0);
  std::vector<double> v(n);
  for (auto& x : v) x = standard_normal(rng);
  return v;
}

}  // namespace

TEST_CASE("csv reading echoes rows and fills gaps") {
  std::istringstream full("date,value\n1948-01-01,1\n1948-01-02,2\n1948-01-03,3\n");
  const auto s = read_csv(full);
  CHECK(s.size() == 3);
  CHECK(s.start() == parse_date("1948-01-01"));
  CHECK(s[2] == 3.0);

  std::istringstream gap("date,value\n1948-01-03,3\n1948-01-01,1\n");
  const auto g = read_csv(gap);
  CHECK(g.size() == 3);
  CHECK(g.missing(1));
  CHECK(g.observed_count() == 2);

  std::istringstream na("value,date\nNA,1948-01-02\n1.5,1948-01-01\n");
  const auto n = read_csv(na);
  CHECK(n[0] == 1.5);
  CHECK(n.missing(1));

  std::istringstream dup("date,value\n1948-01-01,1\n1948-01-01,2\n");
  CHECK_THROWS_AS(read_csv(dup), DataError);
  std::istringstream bad("date,value\n1948-01-01,abc\n1948-01-02,2\n");
  CHECK_THROWS_AS(read_csv(bad), DataError);
  std::istringstream nocol("day,value\n1948-01-01,1\n");
  CHECK_THROWS_AS(read_csv(nocol), DataError);
}

TEST_CASE("csv round trip is exact") {
  std::vector<double> v{0.1, kMissing, -1e-17, 3.0 / 7.0, 12345.678901234567};
  const DailySeries s(parse_date("1999-12-30"), v);
  std::stringstream io;
  write_csv(s, io);
  const auto back = read_csv(io);
  CHECK(back == s);
}

TEST_CASE("a 70-year daily record has 25568 values") {
  const DailySeries s(parse_date("1948-01-01"), std::vector<double>(25568, 0.0));
  CHECK(s.end() == parse_date("2017-12-31"));
  CHECK(s.index_of(parse_date("2017-12-31")) == 25567);
  CHECK(s.index_of(parse_date("2018-01-01")) == -1);
  const auto sl = s.slice(parse_date("2000-01-01"), parse_date("2000-12-31"));
  CHECK(sl.size() == 366);
}

TEST_CASE("harmonic regression recovers exact models") {
  const Date start = parse_date("1950-01-01");
  const auto s = from_function(start, 3000, [](long t) { return 5.0 + 3.0 * std::sin(kOmega * t); });
  const auto fit = fit_harmonics(s, 1, false);
  CHECK(fit.intercept == doctest::Approx(5.0).epsilon(1e-10));
  CHECK(fit.coefficients[0][0] == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(std::abs(fit.coefficients[0][1]) < 1e-8);

  const auto c = from_function(start, 1000, [](long) { return 2.5; });
  const auto cfit = fit_harmonics(c, 2, false);
  CHECK(cfit.intercept == doctest::Approx(2.5));
  for (const auto& ab : cfit.coefficients) {
    CHECK(std::abs(ab[0]) < 1e-10);
    CHECK(std::abs(ab[1]) < 1e-10);
  }

  const auto resid = residualize(s, fit);
  for (double r : resid.values()) CHECK(std::abs(r) < 1e-8);
}

TEST_CASE("harmonic amplitudes of a noisy NAO-like series") {
  const Date start = parse_date("1950-01-01");
  const auto noise = white_noise(20000, 3);
  const auto s = from_function(start, 20000, [&](long t) {
    return 4.0 * std::cos(kOmega * t - 0.3) + 2.0 * std::sin(2 * kOmega * t + 1.0) + noise[static_cast<std::size_t>(t - 1)];
  });
  const auto fit = fit_harmonics(s, 2, true);
  CHECK(fit.amplitude(1) == doctest::Approx(4.0).epsilon(0.02));
  CHECK(fit.amplitude(2) == doctest::Approx(2.0).epsilon(0.04));
  const auto refit = fit_harmonics(residualize(s, fit), 2, true);
  CHECK(std::abs(refit.intercept) < 1e-9);
  CHECK(std::abs(refit.slope) < 1e-12);
  CHECK(refit.amplitude(1) < 1e-9);
  CHECK(refit.amplitude(2) < 1e-9);
}

TEST_CASE("residualize with a zero fit is the identity") {
  const auto s = DailySeries(parse_date("2000-01-01"), white_noise(100, 4));
  HarmonicFit zero;
  zero.origin = s.start();
  zero.coefficients.assign(2, {0.0, 0.0});
  CHECK(residualize(s, zero) == s);
}

TEST_CASE("harmonic fits handle missing values and report rank deficiency") {
  auto v = white_noise(800, 5);
  for (std::size_t i = 0; i < v.size(); i += 7) v[i] = kMissing;
  const DailySeries s(parse_date("2000-01-01"), v);
  const auto fit = fit_harmonics(s, 2, true);
  const auto r = residualize(s, fit);
  CHECK(r.missing(0));
  CHECK_FALSE(r.missing(1));
  const DailySeries tiny(parse_date("2000-01-01"), {1.0, 2.0});
  CHECK_THROWS_AS(fit_harmonics(tiny, 2, true), DataError);
}

TEST_CASE("periodogram peaks") {
  const Date start = parse_date("1950-01-01");
  const long n = 36525;  // 100 annual periods
  const auto s = from_function(start, n, [](long t) { return std::sin(kOmega * t); });
  const auto p = periodogram(s);
  CHECK(p.size() == static_cast<std::size_t>(n / 2));
  const auto top = std::max_element(p.begin(), p.end(), [](auto a, auto b) { return a.power < b.power; });
  CHECK(top->frequency == doctest::Approx(100.0 / n));

  const DailySeries wn(start, white_noise(8192, 6));
  auto wp = periodogram(wn);
  std::vector<double> power;
  for (const auto& q : wp) power.push_back(q.power);
  std::vector<double> sorted = power;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(sorted.size() / 2), sorted.end());
  const double median = sorted[sorted.size() / 2];
  CHECK(*std::max_element(power.begin(), power.end()) < 10.0 * median * 2.0);

  const auto noise = white_noise(20000, 7);
  const auto two = from_function(start, 20000, [&](long t) {
    return 4 * std::sin(kOmega * t) + 2 * std::cos(2 * kOmega * t) + noise[static_cast<std::size_t>(t - 1)];
  });
  auto tp = periodogram(two);
  std::sort(tp.begin(), tp.end(), [](auto a, auto b) { return a.power > b.power; });
  const double f1 = 1.0 / 365.25, f2 = 2.0 / 365.25;
  const double df = 1.0 / 20000;
  const bool first = std::abs(tp[0].frequency - f1) < df || std::abs(tp[0].frequency - f2) < df;
  const bool second = std::abs(tp[1].frequency - f1) < df || std::abs(tp[1].frequency - f2) < df;
  CHECK(first);
  CHECK(second);
}

TEST_CASE("autocorrelation of white noise and AR(1)") {
  const Date start = parse_date("1950-01-01");
  const DailySeries wn(start, white_noise(10000, 8));
  const auto r = acf(wn, 30);
  CHECK(r[0] == 1.0);
  for (int k = 1; k <= 30; ++k) CHECK(std::abs(r[static_cast<std::size_t>(k)]) < 0.05);

  const DailySeries a(start, testing::ar1(50000, 0.8, 9));
  const auto ra = acf(a, 10);
  for (int k = 1; k <= 10; ++k) CHECK(std::abs(ra[static_cast<std::size_t>(k)] - std::pow(0.8, k)) < 0.05);

  const auto pa = pacf(a, 10);
  CHECK(pa[1] == doctest::Approx(0.8).epsilon(0.02));
  for (int k = 2; k <= 10; ++k) CHECK(std::abs(pa[static_cast<std::size_t>(k)]) < 0.05);

  const auto pw = pacf(wn, 20);
  for (int k = 1; k <= 20; ++k) CHECK(std::abs(pw[static_cast<std::size_t>(k)]) < 0.05);
}

TEST_CASE("partial autocorrelation cuts off after the AR order") {
  Rng rng = make_stream(10, 0);
  const std::vector<double> phi{0.6, -0.2, 0.15, 0.1, -0.1};
  std::vector<double> x(60000, 0.0);
  for (std::size_t t = 5; t < x.size(); ++t) {
    double v = standard_normal(rng);
    for (std::size_t p = 0; p < 5; ++p) v += phi[p] * x[t - p - 1];
    x[t] = v;
  }
  const DailySeries s(parse_date("1900-01-01"), std::vector<double>(x.begin() + 1000, x.end()));
  const auto pa = pacf(s, 20);
  CHECK(std::abs(pa[5] + 0.1) < 0.03);
  for (int k = 6; k <= 20; ++k) CHECK(std::abs(pa[static_cast<std::size_t>(k)]) < 0.05);
}

TEST_CASE("masked autocorrelation uses only pairs inside one run") {
  std::vector<double> v(730);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = (i % 2 == 0) ? 1.0 : -1.0;
  const DailySeries s(parse_date("2001-01-01"), v);
  const auto r = acf(s, 2, DayMask::months({1}));
  CHECK(r[0] == 1.0);
  // 62 January days in two runs of 31: 60 lag-1 pairs, all of opposite sign
  CHECK(r[1] < -0.9);
  CHECK(r[2] > 0.9);
}

TEST_CASE("first-difference variance by day of year") {
  const Date start = parse_date("1901-01-01");
  const DailySeries c(start, std::vector<double>(3 * 365 + 10, 4.0));
  const auto zc = first_diff_doy_variance(c);
  CHECK(zc.size() == 366);
  for (const auto& d : zc) {
    if (!std::isnan(d.variance)) CHECK(d.variance == 0.0);
  }

  const DailySeries wn(start, white_noise(365 * 400, 11));
  const auto fd = first_diff_doy_variance(wn);
  double total = 0.0;
  int n = 0;
  for (const auto& d : fd) {
    if (d.doy == 60) continue;
    total += d.variance;
    ++n;
  }
  CHECK(total / n == doctest::Approx(2.0).epsilon(0.02));
  CHECK(fd[59].doy == 60);

  const DailySeries short_series(start, std::vector<double>(400, 1.0));
  CHECK_THROWS_AS(first_diff_doy_variance(short_series), DataError);
}
