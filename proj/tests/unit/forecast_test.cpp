#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "climssm/error.hpp"
#include "climssm/forecast.hpp"
#include "climssm/stats.hpp"
#include "synthetic.hpp"

using namespace climssm;
using namespace climssm::forecast;
using model::ForcingKind;
using model::ModelConfig;

namespace {

ModelConfig small(ForcingKind kind) {
  ModelConfig c;
  c.layout = {1, 2, kind};
  return c;
}

testing::TruthState small_truth() {
  testing::TruthState t;
  t.phi = {0.8, -0.1};
  return t;
}

PointForecasts points(std::vector<double> f, std::vector<double> o) {
  PointForecasts p;
  p.label = "p";
  for (std::size_t i = 0; i < f.size(); ++i) p.years.push_back(2000 + static_cast<int>(i));
  p.forecast = std::move(f);
  p.observed = std::move(o);
  return p;
}

}  // namespace

TEST_CASE("persistence forecasts") {
  const DailySeries s(parse_date("2000-01-01"), {1.0, 2.0, 4.0, kMissing, 8.0});
  const auto l1 = persistence_linear(s, 1);
  CHECK(std::isnan(l1[0]));
  CHECK(l1[1] == 1.0);
  CHECK(l1[2] == 2.0);
  CHECK(std::isnan(l1[4]));
  const auto l2 = persistence_linear(s, 2);
  CHECK(l2[2] == 1.5);
  CHECK(l2[4] == 4.0);  // the missing day is skipped
  CHECK_THROWS(persistence_linear(s, 0));

  const auto e1 = persistence_exponential(s, 1.0);
  CHECK(e1[0] == 1.0);
  CHECK(e1[2] == 4.0);
  CHECK(e1[3] == 4.0);
  CHECK(e1[4] == 8.0);
  for (std::size_t t = 0; t + 1 < s.size(); ++t) {
    if (!s.missing(t)) CHECK(e1[t] == l1[t + 1]);
  }
  const auto eh = persistence_exponential(s, 0.5);
  CHECK(eh[1] == 1.5);
  CHECK(eh[2] == 2.75);
  CHECK_THROWS(persistence_exponential(s, 0.0));
  CHECK_THROWS(persistence_exponential(s, 1.5));

  const DailySeries c(parse_date("2000-01-01"), std::vector<double>(50, 3.25));
  for (double v : persistence_exponential(c, 0.3)) CHECK(v == doctest::Approx(3.25));
  const auto lc = persistence_linear(c, 7);
  for (std::size_t t = 7; t < lc.size(); ++t) CHECK(lc[t] == doctest::Approx(3.25));
}

TEST_CASE("skill and coverage") {
  ForecastSet set;
  set.season = "DJF";
  for (int y = 0; y < 6; ++y) {
    ForecastYear fy;
    fy.year = 2000 + y;
    fy.observed = y * 1.5;
    for (int m = -50; m <= 50; ++m) fy.members.push_back(y * 1.5 + m * 0.1);
    set.years.push_back(fy);
  }
  const auto s = skill(set);
  CHECK(s.correlation == doctest::Approx(1.0));
  CHECK(s.coverage == 1.0);
  CHECK(s.years == 6);
  std::stringstream io;
  write_forecast_csv(set, io);
  const auto rows = read_forecast_csv(io);
  REQUIRE(rows.size() == 6);
  CHECK(rows[2].obs == 3.0);
  CHECK(rows[2].fcst_mean == doctest::Approx(3.0));
  CHECK(rows[2].lo95 < rows[2].hi95);

  // affine recalibration with positive slope keeps the correlation
  const auto p = points({1.0, 3.0, 2.0, 5.0, 4.0}, {1.2, 2.5, 2.6, 4.0, 4.4});
  auto q = p;
  for (auto& f : q.forecast) f = 0.3 * f - 7.0;
  CHECK(correlation(p) == doctest::Approx(correlation(q)).epsilon(1e-14));

  Rng rng = make_stream(77, 0);
  std::vector<double> f(60), o(60);
  for (auto& v : f) v = standard_normal(rng);
  for (auto& v : o) v = standard_normal(rng);
  CHECK(std::abs(correlation(points(f, o))) < 0.35);
}

TEST_CASE("moving-window skill") {
  Rng rng = make_stream(5, 0);
  std::vector<double> f, o;
  for (int i = 0; i < 40; ++i) {
    const double signal = standard_normal(rng);
    f.push_back(signal);
    o.push_back(signal + standard_normal(rng));
  }
  const auto p = points(f, o);
  const auto full = moving_window_skill(p, 40);
  REQUIRE(full.size() == 1);
  CHECK(full[0].correlation == doctest::Approx(correlation(p)));
  CHECK(full[0].label_year == 2019);
  const auto w = moving_window_skill(p, 30, {{2000, 1.0}, {2001, 3.0}});
  CHECK(w.size() == 11);
  CHECK(w[0].label_year == 2014);
  CHECK(w[0].companion_sd == doctest::Approx(std::sqrt(2.0)));
  CHECK(std::isnan(w[5].companion_sd));
  CHECK_THROWS(moving_window_skill(p, 4));
  CHECK_THROWS_AS(moving_window_skill(p, 41), DataError);
}

TEST_CASE("recalibration and combination") {
  Rng rng = make_stream(9, 0);
  std::vector<double> signal, a, b, o;
  for (int i = 0; i < 60; ++i) {
    const double s = standard_normal(rng);
    signal.push_back(s);
    a.push_back(s + standard_normal(rng));
    b.push_back(2.0 * s + 1.0 + 2.0 * standard_normal(rng));
    o.push_back(s + 0.5 * standard_normal(rng));
  }
  auto pa = points(a, o);
  pa.label = "a";
  auto pb = points(b, o);
  pb.label = "b";

  const auto single = recalibrate_and_combine({pa});
  CHECK(single.sets[0].raw_correlation == doctest::Approx(single.sets[0].correlation));
  CHECK(single.correlation == doctest::Approx(single.sets[0].raw_correlation));

  const auto twice = recalibrate_and_combine({pa, pa});
  CHECK(twice.dropped.size() == 1);
  CHECK(twice.correlation == doctest::Approx(single.correlation));

  const auto both = recalibrate_and_combine({pa, pb});
  CHECK(both.used.size() == 2);
  CHECK(both.correlation >= std::max(both.sets[0].correlation, both.sets[1].correlation));
  CHECK(both.coefficients.size() == 3);

  auto shortset = points({1, 2, 3, 4}, {1, 2, 3, 5});
  CHECK_THROWS_AS(recalibrate_and_combine({shortset}), DataError);
}

TEST_CASE("external forecast files") {
  std::istringstream in("year,ensemble_mean\n1999,0.5\n1998,-1.25\n2000,NA\n");
  const auto p = read_external_csv(in, "ext");
  CHECK(p.years == std::vector<int>{1998, 1999, 2000});
  CHECK(p.forecast[0] == -1.25);
  CHECK(std::isnan(p.forecast[2]));
  std::istringstream bad("year,mean\n1999,0.5\n");
  CHECK_THROWS_AS(read_external_csv(bad), DataError);
}

TEST_CASE("model ensemble forecasts") {
  auto cfg = small(ForcingKind::mean_shift);
  const Date start = parse_date("1990-01-01");
  const auto data = testing::simulate_series(cfg, start, 365L * 8, 11, testing::truth_vector(cfg.layout, small_truth()));
  const std::vector<int> years{1993, 1994, 1995, 1996, 1997};
  const auto a = seasonal_forecast(cfg, data, Season::djf(), years, 20, 3);
  const auto b = seasonal_forecast(cfg, data, Season::djf(), years, 20, 3, {2});
  REQUIRE(a.years.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(a.years[i].members == b.years[i].members);
    CHECK(a.years[i].init == Season::djf().first_day(years[i]));
  }
  std::stringstream sa, sb;
  write_forecast_csv(a, sa);
  write_forecast_csv(b, sb);
  CHECK(sa.str() == sb.str());
  const auto obs = observed_seasonal_means(data, Season::djf(), years);
  CHECK(a.years[2].observed == obs[2]);
  CHECK_THROWS_AS(seasonal_forecast(cfg, data, Season::djf(), {1999}, 20, 3), DataError);
  CHECK_THROWS(seasonal_forecast(cfg, data, Season::djf(), years, 1, 3));
}

TEST_CASE("a deterministic model gives identical members") {
  ModelConfig cfg = small(ForcingKind::none);
  cfg.params.V = 1e-6;
  cfg.params.W_mu = cfg.params.W_beta = cfg.params.W_phi = 0.0;
  cfg.params.W_X = cfg.params.a_X = cfg.params.b_X = 0.0;
  cfg.priors.mu = {6.0, 0.0};
  cfg.priors.beta = {0.0, 0.0};
  cfg.priors.psi1 = {2.0, 0.0};
  cfg.priors.X = {1.0, 0.0};
  cfg.priors.phi = {0.5, 0.0};
  const DailySeries data(parse_date("2000-01-01"), std::vector<double>(800, kMissing));
  const auto f = seasonal_forecast(cfg, data, Season::mam(), {2000, 2001}, 5, 1);
  for (const auto& y : f.years) {
    for (double m : y.members) CHECK(m == y.members.front());
    CHECK(std::isnan(y.observed));
  }
}

TEST_CASE("persistence baseline scan") {
  const Date start = parse_date("1950-01-01");
  const std::size_t n = 365 * 60;
  std::vector<int> years;
  for (int y = 1951; y <= 2009; ++y) years.push_back(y);
  auto seasonal = [&](std::vector<double> x) {
    for (std::size_t i = 0; i < n; ++i) x[i] += 3.0 * std::sin(kOmega * static_cast<double>(i + 1));
    return DailySeries(start, std::move(x));
  };

  SUBCASE("a Markov series is best predicted by its last value") {
    const auto data = seasonal(testing::ar1(n, 0.9, 21));
    const auto scan = optimize_baseline(data, Season::djf(), years, BaselineKind::exponential,
                                        default_grid(BaselineKind::exponential));
    CHECK(scan.best_parameter > 0.5);
  }

  // a level held from each September to the following August favours smoothing
  auto x = testing::ar1(n, 0.9, 21);
  const auto levels = testing::ar1(61, 0.0, 22);
  for (std::size_t i = 0; i < n; ++i) {
    const Date d = add_days(start, static_cast<long>(i));
    const int year = static_cast<int>(d.year()) - 1950 + (static_cast<unsigned>(d.month()) >= 9 ? 1 : 0);
    x[i] += 2.0 * levels[static_cast<std::size_t>(year)];
  }
  const auto data = seasonal(std::move(x));
  const auto scan = optimize_baseline(data, Season::djf(), years, BaselineKind::exponential,
                                      default_grid(BaselineKind::exponential));
  CHECK(scan.best_parameter > 0.0);
  CHECK(scan.best_parameter < 0.1);
  CHECK(scan.correlations.size() == 200);
  CHECK(scan.forecasts.years.size() == years.size());

  const auto one = optimize_baseline(data, Season::djf(), years, BaselineKind::linear, {7.0});
  CHECK(one.best_parameter == 7.0);
  CHECK(one.correlations.size() == 1);
  CHECK_THROWS(optimize_baseline(data, Season::djf(), years, BaselineKind::linear, {}));
  CHECK_THROWS(optimize_baseline(data, Season::djf(), years, BaselineKind::linear, {1.5}));
}
