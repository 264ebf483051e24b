#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "climssm/error.hpp"
#include "climssm/estimation.hpp"
#include "synthetic.hpp"

using namespace climssm;
using namespace climssm::estimation;
using model::ForcingKind;
using model::ModelConfig;

namespace {

ModelConfig small_config(ForcingKind kind) {
  ModelConfig c;
  c.layout = {1, 2, kind};
  return c;
}

DailySeries small_data(std::uint64_t seed, ForcingKind kind = ForcingKind::mean_shift, long days = 4 * 365) {
  auto c = small_config(kind);
  testing::TruthState truth;
  truth.phi = {0.8, -0.1};
  return testing::simulate_series(c, parse_date("2000-01-01"), days, seed, testing::truth_vector(c.layout, truth));
}

}  // namespace

TEST_CASE("parameter transform") {
  ModelConfig c;
  const ParamTransform t(c);
  CHECK(t.size() == 9);
  CHECK(t.names().front() == "V");
  CHECK(t.names().back() == "varphi");
  const auto x = t.to_unconstrained(c.params);
  CHECK(x(8) == doctest::Approx(std::log(0.995 / 0.005)).epsilon(1e-12));
  CHECK(x(8) == doctest::Approx(5.2933).epsilon(1e-4));
  CHECK(x(4) == 0.39);  // a_X on the identity scale
  const auto p = t.to_params(x, model::ModelParams{});
  const auto x2 = t.to_unconstrained(p);
  CHECK((x2 - x).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(std::abs(p.varphi - 0.995) < 1e-12);
  CHECK(std::abs(p.W_X - 2.39) < 1e-12);

  c.layout.kind = ForcingKind::none;
  CHECK(ParamTransform(c).size() == 7);
  c.tie_psi = false;
  CHECK(ParamTransform(c).size() == 8);
  c.fixed = {"V", "W_beta"};
  CHECK(ParamTransform(c).size() == 6);
  CHECK_THROWS(ParamTransform(c).to_params(Eigen::VectorXd::Zero(3), c.params));
}

TEST_CASE("BIC identity") {
  CHECK(bic(9, 1000, -500.0) == doctest::Approx(9 * std::log(1000.0) + 1000.0));
}

TEST_CASE("likelihood prefers the generating parameters") {
  const auto data = testing::simulate_series(ModelConfig{}, parse_date("1990-01-01"), 3652, 41);
  ModelConfig c;
  const ParamTransform t(c);
  const Eigen::VectorXd truth = t.to_unconstrained(c.params);
  const double at_truth = negloglik(truth, c, t, data);
  CHECK(std::isfinite(at_truth));
  CHECK(at_truth < kDivergenceSentinel);
  auto perturbed = [&](std::initializer_list<const char*> names, double factor) {
    Eigen::VectorXd x = truth;
    for (std::size_t i = 0; i < t.size(); ++i) {
      for (const char* name : names) {
        if (t.names()[i] == name) x(static_cast<Eigen::Index>(i)) += std::log(factor);
      }
    }
    return negloglik(x, c, t, data);
  };
  const auto all = {"V", "W_mu", "W_beta", "W_X", "W_phi", "W_delta"};
  CHECK(at_truth < perturbed(all, 10.0));
  CHECK(at_truth < perturbed(all, 0.1));
  CHECK(at_truth < perturbed({"W_X"}, 10.0));
  CHECK(at_truth < perturbed({"W_X"}, 0.1));
}

TEST_CASE("filter breakdown maps to the sentinel") {
  ModelConfig c = small_config(ForcingKind::none);
  const ParamTransform t(c);
  Eigen::VectorXd x = t.to_unconstrained(c.params);
  x(0) = 800.0;  // V = exp(800) overflows
  const auto data = small_data(1, ForcingKind::none, 400);
  const double v = negloglik(x, c, t, data);
  CHECK(v >= kDivergenceSentinel);
  CHECK(v == doctest::Approx(kDivergenceSentinel + 1e6 * x.norm()));
}

TEST_CASE("maximum likelihood on a small model") {
  const auto data = small_data(2);
  ModelConfig c = small_config(ForcingKind::mean_shift);
  c.fixed = {"V", "W_mu", "W_beta", "W_phi", "varphi"};
  c.params.W_X = 4.0;
  c.params.a_X = 0.0;
  c.params.b_X = 0.5;
  c.params.W_delta = 0.5;
  const ParamTransform t(c);
  const double start = negloglik(t.to_unconstrained(c.params), c, t, data);
  const auto r = fit_mle(c, data);
  CHECK(r.k == 4);
  CHECK(r.n == static_cast<long>(data.observed_count()));
  CHECK(r.bic == doctest::Approx(bic(r.k, r.n, r.log_likelihood)));
  CHECK(-r.log_likelihood <= start);
  CHECK(r.status == optim::Status::converged);
  CHECK(std::abs(std::log10(r.config.params.W_X) - std::log10(2.39)) < 0.2);
  CHECK(r.config.params.V == c.params.V);

  std::stringstream io;
  write_report(r, io);
  const auto s = read_report(io);
  CHECK(s.k == r.k);
  CHECK(s.n == r.n);
  CHECK(s.bic == r.bic);
  CHECK(s.log_likelihood == r.log_likelihood);
  CHECK(s.status == "converged");
}

TEST_CASE("grid search ranks by BIC and is deterministic") {
  const auto data = small_data(3);
  ModelConfig c = small_config(ForcingKind::mean_shift);
  c.fixed = {"V", "W_mu", "W_beta", "W_phi", "varphi", "a_X", "b_X"};
  GridOptions opt;
  opt.fit.bfgs.max_iterations = 30;
  const std::vector<model::InfluenceFunction> family{{11, 1, 165, 30}, {5, 1, 90, 30}};
  const auto rows = grid_search(data, c, family, {ForcingKind::mean_shift}, opt);
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i - 1].report.bic <= rows[i].report.bic);
  const auto null_row = std::find_if(rows.begin(), rows.end(), [](const GridRow& r) { return !r.influence; });
  REQUIRE(null_row != rows.end());
  CHECK(null_row->report.k == 1);
  CHECK(rows.front().kind == ForcingKind::mean_shift);
  CHECK(rows.front().influence->start_month == 11);

  opt.threads = 2;
  const auto again = grid_search(data, c, family, {ForcingKind::mean_shift}, opt);
  std::stringstream a, b;
  write_grid_csv(rows, a);
  write_grid_csv(again, b);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("start_month,length_days,forcing_kind,loglik,k,bic,status\n", 0) == 0);
  CHECK_THROWS(grid_search(data, c, {}, {ForcingKind::mean_shift}, opt));
}

TEST_CASE("classical potential predictability") {
  const Date start = parse_date("1900-01-01");
  const long days = 365L * 60 + 15;
  SUBCASE("pure AR(1) noise has no forced share") {
    double share = 0.0;
    const int seeds = 20;
    for (int seed = 0; seed < seeds; ++seed) {
      const DailySeries s(start, testing::ar1(static_cast<std::size_t>(days), 0.7, 500 + seed));
      const auto pp = classical_pp(s, Season::djf());
      share += 1.0 - pp.implied_variance / pp.observed_variance;
      CHECK(pp.phi == doctest::Approx(0.7).epsilon(0.05));
      CHECK(pp.forced_fraction + pp.noise_fraction == doctest::Approx(1.0));
      CHECK(pp.seasons >= 58);
    }
    CHECK(std::abs(share / seeds) < 0.1);
  }
  SUBCASE("added seasonal shifts with three times the noise variance") {
    const double phi = 0.7;
    auto x = testing::ar1(static_cast<std::size_t>(days), phi, 52);
    // implied variance of a 90-day mean of AR(1) noise with unit innovations
    const double L = 90.25;
    const double s2 = 1.0 / (1.0 - phi * phi);
    double acc = L;
    double pk = 1.0;
    for (int k = 1; k < 90; ++k) {
      pk *= phi;
      acc += 2.0 * (L - k) * pk;
    }
    const double implied = s2 * acc / (L * L);
    Rng rng = make_stream(53, 0);
    const Season djf = Season::djf();
    for (int y = 1901; y <= 1959; ++y) {
      const double shift = std::sqrt(3.0 * implied) * standard_normal(rng);
      for (long i = days_between(start, djf.first_day(y)); i <= days_between(start, djf.last_day(y)); ++i) {
        x[static_cast<std::size_t>(i)] += shift;
      }
    }
    const auto pp = classical_pp(DailySeries(start, x), djf);
    CHECK(std::abs(pp.forced_fraction - 0.75) < 0.1);
  }
  SUBCASE("too few seasons") {
    const DailySeries s(start, testing::ar1(365 * 5, 0.5, 54));
    CHECK_THROWS_AS(classical_pp(s, Season::djf()), DataError);
  }
}
