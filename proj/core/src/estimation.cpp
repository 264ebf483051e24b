#include "climssm/estimation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include "climssm/error.hpp"
#include "climssm/stats.hpp"

namespace climssm::estimation {

using model::ForcingKind;
using model::ModelConfig;
using model::ModelParams;

namespace {

enum class Scale { log, identity, logit };

Scale scale_of(const std::string& name) {
  if (name == "a_X" || name == "b_X") return Scale::identity;
  if (name == "varphi") return Scale::logit;
  return Scale::log;
}

double& field(ModelParams& p, const std::string& name) {
  if (name == "V") return p.V;
  if (name == "W_mu") return p.W_mu;
  if (name == "W_beta") return p.W_beta;
  if (name == "W_psi") return p.W_psi;
  if (name == "W_X") return p.W_X;
  if (name == "a_X") return p.a_X;
  if (name == "b_X") return p.b_X;
  if (name == "W_phi") return p.W_phi;
  if (name == "W_delta") return p.W_delta;
  if (name == "varphi") return p.varphi;
  throw ConfigError("unknown parameter '" + name + "'");
}

double field(const ModelParams& p, const std::string& name) {
  return field(const_cast<ModelParams&>(p), name);
}

}  // namespace

ParamTransform::ParamTransform(const ModelConfig& config) {
  std::vector<std::string> all{"V", "W_mu", "W_beta"};
  if (!config.tie_psi) all.push_back("W_psi");
  for (const char* n : {"W_X", "a_X", "b_X", "W_phi"}) all.emplace_back(n);
  if (config.layout.kind != ForcingKind::none) {
    all.emplace_back("W_delta");
    all.emplace_back("varphi");
  }
  for (const auto& n : all) {
    if (std::find(config.fixed.begin(), config.fixed.end(), n) == config.fixed.end()) names_.push_back(n);
  }
}

Eigen::VectorXd ParamTransform::to_unconstrained(const ModelParams& params) const {
  Eigen::VectorXd x(static_cast<Eigen::Index>(names_.size()));
  for (std::size_t i = 0; i < names_.size(); ++i) {
    const double v = field(params, names_[i]);
    double u = v;
    switch (scale_of(names_[i])) {
      case Scale::log: u = std::log(v); break;
      case Scale::logit: u = std::log(v / (1.0 - v)); break;
      case Scale::identity: break;
    }
    x(static_cast<Eigen::Index>(i)) = u;
  }
  return x;
}

ModelParams ParamTransform::to_params(const Eigen::VectorXd& x, const ModelParams& base) const {
  if (static_cast<std::size_t>(x.size()) != names_.size()) {
    throw std::invalid_argument("unconstrained vector length does not match the transform");
  }
  ModelParams p = base;
  for (std::size_t i = 0; i < names_.size(); ++i) {
    const double u = x(static_cast<Eigen::Index>(i));
    double v = u;
    switch (scale_of(names_[i])) {
      case Scale::log: v = std::exp(u); break;
      case Scale::logit: v = 1.0 / (1.0 + std::exp(-u)); break;
      case Scale::identity: break;
    }
    field(p, names_[i]) = v;
  }
  return p;
}

double negloglik(const Eigen::VectorXd& x, const ModelConfig& config, const ParamTransform& transform,
                 const DailySeries& data) {
  const double sentinel = kDivergenceSentinel + 1e6 * x.norm();
  try {
    ModelConfig cfg = config;
    cfg.params = transform.to_params(x, config.params);
    const auto params = cfg.effective_params();
    params.validate();
    const auto fn = model::build_model(cfg.layout, params, cfg.influence, data.start());
    const auto prior = cfg.state_priors().to_state();
    const double ll = ssm::log_likelihood(fn, prior, data.values());
    if (!std::isfinite(ll)) return sentinel;
    return -ll;
  } catch (const NumericalError&) {
    return sentinel;
  } catch (const ConfigError&) {
    return sentinel;
  }
}

double bic(int k, long n, double log_likelihood) {
  return static_cast<double>(k) * std::log(static_cast<double>(n)) - 2.0 * log_likelihood;
}

FitReport fit_mle(const ModelConfig& initial, const DailySeries& data, const FitOptions& options) {
  initial.validate();
  const ParamTransform transform(initial);
  FitReport report;
  report.free_parameters = transform.names();
  report.k = static_cast<int>(transform.size());
  report.n = static_cast<long>(data.observed_count());
  report.config = initial;

  if (transform.size() == 0) {
    report.log_likelihood = -negloglik(Eigen::VectorXd(0), initial, transform, data);
    report.status = optim::Status::converged;
  } else {
    const Eigen::VectorXd x0 = transform.to_unconstrained(initial.params);
    const optim::Objective f = [&](const Eigen::VectorXd& x) {
      return negloglik(x, initial, transform, data);
    };
    const auto res = optim::minimize_bfgs(f, x0, options.bfgs);
    report.config.params = transform.to_params(res.x, initial.params);
    if (report.config.tie_psi) report.config.params.W_psi = report.config.params.W_mu;
    report.log_likelihood = -res.value;
    report.status = res.status;
    report.iterations = res.iterations;
    report.evaluations = res.evaluations;
  }
  report.bic = bic(report.k, report.n, report.log_likelihood);
  return report;
}

void write_report(const FitReport& r, std::ostream& out) {
  out << "status = " << optim::to_string(r.status) << '\n'
      << "iterations = " << r.iterations << '\n'
      << "evaluations = " << r.evaluations << '\n'
      << "loglik = " << format_double(r.log_likelihood) << '\n'
      << "k = " << r.k << '\n'
      << "n = " << r.n << '\n'
      << "bic = " << format_double(r.bic) << '\n'
      << "free_parameters = ";
  for (std::size_t i = 0; i < r.free_parameters.size(); ++i) out << (i ? "," : "") << r.free_parameters[i];
  out << '\n';
  const auto p = r.config.effective_params();
  for (const char* name : {"V", "W_mu", "W_beta", "W_psi", "W_X", "a_X", "b_X", "W_phi", "W_delta", "varphi"}) {
    out << "param." << name << " = " << format_double(field(p, name)) << '\n';
  }
}

ReportSummary read_report(std::istream& in) {
  ReportSummary s;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 3);
    if (key == "status") s.status = value;
    else if (key == "iterations") s.iterations = std::stoi(value);
    else if (key == "loglik") s.log_likelihood = std::stod(value);
    else if (key == "k") s.k = std::stoi(value);
    else if (key == "n") s.n = std::stol(value);
    else if (key == "bic") s.bic = std::stod(value);
  }
  return s;
}

// --- grid search -----------------------------------------------------------------

std::vector<GridRow> grid_search(const DailySeries& data, const ModelConfig& base,
                                 const std::vector<model::InfluenceFunction>& family,
                                 const std::vector<ForcingKind>& kinds, const GridOptions& options) {
  if (family.empty()) throw std::invalid_argument("influence family is empty");
  std::vector<GridRow> rows;
  std::vector<ModelConfig> configs;
  if (options.include_null) {
    GridRow row;
    row.kind = ForcingKind::none;
    row.order = 0;
    rows.push_back(row);
    ModelConfig cfg = base;
    cfg.layout.kind = ForcingKind::none;
    configs.push_back(cfg);
  }
  for (ForcingKind kind : kinds) {
    if (kind == ForcingKind::none) continue;
    for (const auto& fn : family) {
      GridRow row;
      row.kind = kind;
      row.influence = fn;
      row.order = rows.size();
      rows.push_back(row);
      ModelConfig cfg = base;
      cfg.layout.kind = kind;
      cfg.influence = fn;
      configs.push_back(cfg);
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) {
      try {
        rows[i].report = fit_mle(configs[i], data, options.fit);
      } catch (const std::exception& e) {
        rows[i].failed = true;
        rows[i].message = e.what();
        rows[i].report.config = configs[i];
        rows[i].report.bic = std::numeric_limits<double>::infinity();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(rows.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  std::stable_sort(rows.begin(), rows.end(), [](const GridRow& a, const GridRow& b) {
    if (a.report.bic != b.report.bic) return a.report.bic < b.report.bic;
    return a.order < b.order;
  });
  return rows;
}

void write_grid_csv(const std::vector<GridRow>& rows, std::ostream& out) {
  out << "start_month,length_days,forcing_kind,loglik,k,bic,status\n";
  for (const auto& r : rows) {
    if (r.influence) {
      out << r.influence->start_month << ',' << r.influence->length_days << ',';
    } else {
      out << ",,";
    }
    out << model::to_string(r.kind) << ',' << format_double(r.report.log_likelihood) << ','
        << r.report.k << ',' << format_double(r.report.bic) << ','
        << (r.failed ? "failed" : optim::to_string(r.report.status)) << '\n';
  }
}

// --- classical potential predictability ------------------------------------------

namespace {

// Expected within-season sums of an AR(1) sequence of length L with unit
// marginal variance after removing the season's own mean:
// s0 = E sum (x_t - m)^2, s1 = E sum (x_t - m)(x_{t-1} - m), c = Var(m).
struct SeasonMoments {
  double s0 = 0.0;
  double s1 = 0.0;
  double c = 0.0;
};

SeasonMoments ar1_season_moments(double phi, long L) {
  std::vector<double> rho(static_cast<std::size_t>(L));
  rho[0] = 1.0;
  for (long k = 1; k < L; ++k) rho[static_cast<std::size_t>(k)] = rho[static_cast<std::size_t>(k - 1)] * phi;
  // a_t = sum_s rho_|t-s|, so Cov(x_t, m) = a_t / L
  std::vector<double> a(static_cast<std::size_t>(L));
  for (long t = 0; t < L; ++t) {
    double acc = 0.0;
    for (long u = 0; u < L; ++u) acc += rho[static_cast<std::size_t>(std::abs(t - u))];
    a[static_cast<std::size_t>(t)] = acc;
  }
  double total = 0.0;
  for (double v : a) total += v;
  const double n = static_cast<double>(L);
  SeasonMoments m;
  m.c = total / (n * n);
  m.s0 = n - n * m.c;
  double cross = 0.0;
  for (long t = 1; t < L; ++t) cross += a[static_cast<std::size_t>(t)] + a[static_cast<std::size_t>(t - 1)];
  m.s1 = L > 1 ? (n - 1.0) * rho[1] - cross / n + (n - 1.0) * m.c : 0.0;
  return m;
}

}  // namespace

ClassicalPP classical_pp(const DailySeries& data, const Season& season) {
  // season occurrences fully inside the data; contiguous observed runs only
  std::map<int, std::vector<std::size_t>> seasons;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (const auto y = season.label_year(data.date_at(i))) seasons[*y].push_back(i);
  }
  std::vector<std::vector<std::size_t>> complete;
  for (const auto& [year, idx] : seasons) {
    if (data.index_of(season.first_day(year)) < 0 || data.index_of(season.last_day(year)) < 0) continue;
    std::vector<std::size_t> observed;
    for (auto i : idx) {
      if (!data.missing(i)) observed.push_back(i);
    }
    if (observed.size() < 3) continue;
    complete.push_back(std::move(observed));
  }
  if (complete.size() < 10) throw DataError("classical potential predictability needs at least 10 seasons");

  std::vector<double> season_means;
  std::map<long, int> lengths;  // observed length -> number of seasons
  double s0 = 0.0, s1 = 0.0;
  for (const auto& idx : complete) {
    stats::CompensatedSum sum;
    for (auto i : idx) sum.add(data[i]);
    const double m = sum.value() / static_cast<double>(idx.size());
    season_means.push_back(m);
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const double r = data[idx[j]] - m;
      s0 += r * r;
      if (j > 0 && idx[j] == idx[j - 1] + 1) s1 += r * (data[idx[j - 1]] - m);
    }
    ++lengths[static_cast<long>(idx.size())];
  }
  if (!(s0 > 0.0)) throw NumericalError("zero within-season variance");

  // method of moments: match the ratio of expected within-season lag-one and
  // lag-zero sums of mean-removed AR(1) noise, then scale the variance
  auto expected = [&](double phi) {
    SeasonMoments total;
    for (const auto& [L, count] : lengths) {
      const auto m = ar1_season_moments(phi, L);
      total.s0 += count * m.s0;
      total.s1 += count * m.s1;
      total.c += count * m.c;
    }
    total.c /= static_cast<double>(complete.size());
    return total;
  };
  const double target = s1 / s0;
  double lo = -0.999, hi = 0.9999;
  auto ratio = [&](double phi) {
    const auto e = expected(phi);
    return e.s1 / e.s0;
  };
  if (target <= ratio(lo) || target >= ratio(hi)) {
    throw NumericalError("within-season AR(1) coefficient is not stationary");
  }
  for (int it = 0; it < 100 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ratio(mid) < target ? lo : hi) = mid;
  }
  const double phi = 0.5 * (lo + hi);
  const auto e = expected(phi);
  const double sigma_x2 = s0 / e.s0;

  ClassicalPP out;
  out.seasons = static_cast<int>(complete.size());
  out.phi = phi;
  out.innovation_variance = sigma_x2 * (1.0 - phi * phi);
  out.observed_variance = stats::variance(season_means);
  out.implied_variance = sigma_x2 * e.c;
  if (!(out.observed_variance > 0.0)) throw NumericalError("zero inter-annual variance of seasonal means");
  out.forced_fraction = std::max(0.0, 1.0 - out.implied_variance / out.observed_variance);
  out.noise_fraction = 1.0 - out.forced_fraction;
  return out;
}

}  // namespace climssm::estimation
