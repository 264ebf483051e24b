#include "climssm/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "climssm/error.hpp"

namespace climssm::model {

namespace chr = std::chrono;

std::string to_string(ForcingKind kind) {
  switch (kind) {
    case ForcingKind::none: return "none";
    case ForcingKind::mean_shift: return "mean-shift";
    case ForcingKind::ac_shift: return "ac-shift";
  }
  return "unknown";
}

ForcingKind parse_forcing_kind(std::string_view text) {
  if (text == "none") return ForcingKind::none;
  if (text == "mean-shift") return ForcingKind::mean_shift;
  if (text == "ac-shift") return ForcingKind::ac_shift;
  throw ConfigError("unknown forcing kind '" + std::string(text) + "'");
}

// --- influence function ------------------------------------------------------

void InfluenceFunction::validate() const {
  const chr::month_day md{chr::month{start_month}, chr::day{start_day}};
  if (!md.ok() || (start_month == 2 && start_day == 29)) {
    throw ConfigError("invalid influence start " + std::to_string(start_month) + "-" +
                      std::to_string(start_day));
  }
  if (length_days < 1 || length_days > 365) throw ConfigError("influence length must be in 1..365 days");
  if (taper_days < 0) throw ConfigError("influence taper must be non-negative");
}

double InfluenceFunction::operator()(const Date& date) const {
  Date start{date.year(), chr::month{start_month}, chr::day{start_day}};
  if (chr::sys_days{date} < chr::sys_days{start}) {
    start = Date{date.year() - chr::years{1}, chr::month{start_month}, chr::day{start_day}};
  }
  const long offset = days_between(start, date);
  if (offset >= length_days) return 0.0;
  if (taper_days == 0) return 1.0;
  const double ramp = static_cast<double>(std::min<long>(offset, length_days - offset)) /
                      static_cast<double>(taper_days);
  return std::clamp(ramp, 0.0, 1.0);
}

std::string InfluenceFunction::describe() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%02u-%02u/%dd/%dd", start_month, start_day, length_days, taper_days);
  return buf;
}

double influence(const InfluenceFunction& fn, const Date& date) { return fn(date); }

std::vector<InfluenceFunction> influence_family(std::vector<int> lengths,
                                                std::vector<unsigned> start_months,
                                                int taper_days) {
  if (lengths.empty()) {
    for (int l = 90; l <= 330; l += 30) lengths.push_back(l);
  }
  if (start_months.empty()) {
    for (unsigned m = 1; m <= 12; ++m) start_months.push_back(m);
  }
  std::vector<InfluenceFunction> family;
  for (unsigned m : start_months) {
    for (int l : lengths) {
      InfluenceFunction fn{m, 1, l, taper_days};
      fn.validate();
      family.push_back(fn);
    }
  }
  return family;
}

// --- parameters -----------------------------------------------------------------

void ModelParams::validate() const {
  const double values[] = {V, W_mu, W_beta, W_psi, W_X, a_X, b_X, W_phi, W_delta, varphi};
  for (double v : values) {
    if (!std::isfinite(v)) throw ConfigError("non-finite model parameter");
  }
  if (V < 0 || W_mu < 0 || W_beta < 0 || W_psi < 0 || W_phi < 0 || W_delta < 0) {
    throw ConfigError("variance parameters must be non-negative");
  }
  if (W_X < 0) throw ConfigError("W_X must be non-negative");
  if (!(varphi > 0 && varphi < 1)) throw ConfigError("varphi must lie in (0, 1)");
}

double seasonal_variance(const ModelParams& p, long t) {
  const double angle = kOmega * static_cast<double>(t);
  return p.W_X + std::hypot(p.a_X, p.b_X) + p.a_X * std::sin(angle) + p.b_X * std::cos(angle);
}

// --- layout ------------------------------------------------------------------------

int StateLayout::delta_count() const {
  switch (kind) {
    case ForcingKind::none: return 0;
    case ForcingKind::mean_shift: return 1;
    case ForcingKind::ac_shift: return P;
  }
  return 0;
}

void StateLayout::validate() const {
  if (K < 0) throw ConfigError("K must be non-negative");
  if (P < 1) throw ConfigError("P must be at least 1");
}

std::vector<std::string> StateLayout::coordinate_names() const {
  std::vector<std::string> names{"mu", "beta"};
  for (int k = 1; k <= K; ++k) {
    names.push_back("psi" + std::to_string(k));
    names.push_back("psi" + std::to_string(k) + "_star");
  }
  for (int p = 0; p < lag_count(); ++p) names.push_back(p == 0 ? "X" : "X_lag" + std::to_string(p));
  for (int p = 1; p <= P; ++p) names.push_back("phi" + std::to_string(p));
  if (kind == ForcingKind::mean_shift) names.push_back("delta");
  if (kind == ForcingKind::ac_shift) {
    for (int p = 1; p <= P; ++p) names.push_back("delta" + std::to_string(p));
  }
  return names;
}

// --- priors ------------------------------------------------------------------------

ssm::GaussianState StatePriors::to_state() const {
  return {mean, variance.asDiagonal()};
}

StatePriors default_priors(const StateLayout& layout, const PriorSpec& spec) {
  layout.validate();
  const Eigen::Index n = layout.dim();
  StatePriors pr{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Ones(n)};
  auto set = [&](Eigen::Index i, const Prior& p) {
    if (!(p.variance >= 0)) throw ConfigError("prior variances must be non-negative");
    pr.mean(i) = p.mean;
    pr.variance(i) = p.variance;
  };
  set(layout.mu(), spec.mu);
  set(layout.beta(), spec.beta);
  for (int k = 1; k <= layout.K; ++k) {
    set(layout.psi(k), k == 1 ? spec.psi1 : spec.psi);
    set(layout.psi_star(k), k == 1 ? spec.psi1 : spec.psi);
  }
  for (int p = 0; p < layout.lag_count(); ++p) set(layout.lag(p), spec.X);
  if (!spec.phi_means.empty() && static_cast<int>(spec.phi_means.size()) != layout.P) {
    throw ConfigError("prior.phi_means must list exactly P values");
  }
  for (int p = 1; p <= layout.P; ++p) {
    Prior phi = spec.phi;
    if (!spec.phi_means.empty()) phi.mean = spec.phi_means[static_cast<std::size_t>(p - 1)];
    set(layout.phi(p), phi);
  }
  for (int p = 1; p <= layout.delta_count(); ++p) {
    set(layout.delta(p), layout.kind == ForcingKind::ac_shift ? spec.delta_ac : spec.delta);
  }
  return pr;
}

// --- composite model ---------------------------------------------------------------

namespace {

struct CompositeModel {
  StateLayout layout;
  ModelParams params;
  InfluenceFunction fn;
  chr::sys_days origin;
  std::vector<double> cos_k, sin_k;

  double lambda(long t) const {
    if (layout.kind == ForcingKind::none) return 0.0;
    return fn(Date{origin + chr::days{t - 1}});
  }

  void transition(long t, const Eigen::VectorXd& x, ssm::TransitionEval& out) const {
    const auto& L = layout;
    out.mean = x;
    out.jacobian.setIdentity();
    out.noise.setZero();

    out.mean(L.mu()) = x(L.mu()) + x(L.beta());
    out.jacobian(L.mu(), L.beta()) = 1.0;
    out.noise(L.mu(), L.mu()) = params.W_mu;
    out.noise(L.beta(), L.beta()) = params.W_beta;

    for (int k = 1; k <= L.K; ++k) {
      const double c = cos_k[static_cast<std::size_t>(k - 1)];
      const double s = sin_k[static_cast<std::size_t>(k - 1)];
      const auto i = L.psi(k), j = L.psi_star(k);
      out.mean(i) = x(i) * c + x(j) * s;
      out.mean(j) = x(j) * c - x(i) * s;
      out.jacobian(i, i) = c;
      out.jacobian(i, j) = s;
      out.jacobian(j, i) = -s;
      out.jacobian(j, j) = c;
      out.noise(i, i) = params.W_psi;
      out.noise(j, j) = params.W_psi;
    }

    // X_t = sum_p phi_p X_{t-p}; previous lag slot p-1 holds X_{t-p}
    double xt = 0.0;
    const auto x0 = L.lag(0);
    for (int p = 1; p <= L.P; ++p) {
      xt += x(L.phi(p)) * x(L.lag(p - 1));
    }
    for (int j = L.lag_count() - 1; j >= 1; --j) {
      out.mean(L.lag(j)) = x(L.lag(j - 1));
      out.jacobian(L.lag(j), L.lag(j)) = 0.0;
      out.jacobian(L.lag(j), L.lag(j - 1)) = 1.0;
    }
    out.mean(x0) = xt;
    out.jacobian(x0, x0) = 0.0;
    for (int p = 1; p <= L.P; ++p) {
      out.jacobian(x0, L.lag(p - 1)) = x(L.phi(p));
      out.jacobian(x0, L.phi(p)) = x(L.lag(p - 1));
      out.noise(L.phi(p), L.phi(p)) = params.W_phi;
    }
    out.noise(x0, x0) = seasonal_variance(params, t);

    for (int p = 1; p <= L.delta_count(); ++p) {
      const auto d = L.delta(p);
      out.mean(d) = params.varphi * x(d);
      out.jacobian(d, d) = params.varphi;
      out.noise(d, d) = params.W_delta;
    }
  }

  void observation(long t, const Eigen::VectorXd& x, ssm::ObservationEval& out) const {
    const auto& L = layout;
    out.gradient.setZero();
    double y = x(L.mu());
    out.gradient(L.mu()) = 1.0;
    for (int k = 1; k <= L.K; ++k) {
      y += x(L.psi(k));
      out.gradient(L.psi(k)) = 1.0;
    }
    y += x(L.lag(0));
    out.gradient(L.lag(0)) = 1.0;
    if (L.kind == ForcingKind::mean_shift) {
      const double lam = lambda(t);
      y += lam * x(L.delta());
      out.gradient(L.delta()) = lam;
    } else if (L.kind == ForcingKind::ac_shift) {
      const double lam = lambda(t);
      for (int p = 1; p <= L.P; ++p) {
        y += lam * x(L.delta(p)) * x(L.lag(p));
        out.gradient(L.lag(p)) += lam * x(L.delta(p));
        out.gradient(L.delta(p)) = lam * x(L.lag(p));
      }
    }
    out.mean = y;
    out.variance = params.V;
  }
};

}  // namespace

ssm::ModelFunctions build_model(const StateLayout& layout, const ModelParams& params,
                                const InfluenceFunction& fn, const Date& origin) {
  layout.validate();
  params.validate();
  fn.validate();
  auto impl = std::make_shared<CompositeModel>();
  impl->layout = layout;
  impl->params = params;
  impl->fn = fn;
  impl->origin = chr::sys_days{origin};
  for (int k = 1; k <= layout.K; ++k) {
    impl->cos_k.push_back(std::cos(k * kOmega));
    impl->sin_k.push_back(std::sin(k * kOmega));
  }
  ssm::ModelFunctions mf;
  mf.dim = layout.dim();
  mf.coordinate_names = layout.coordinate_names();
  mf.transition = [impl](long t, const Eigen::VectorXd& x, ssm::TransitionEval& out) {
    impl->transition(t, x, out);
  };
  mf.observation = [impl](long t, const Eigen::VectorXd& x, ssm::ObservationEval& out) {
    impl->observation(t, x, out);
  };
  return mf;
}

ModelParams ModelConfig::effective_params() const {
  ModelParams p = params;
  if (tie_psi) p.W_psi = p.W_mu;
  return p;
}

ssm::ModelFunctions ModelConfig::build(const Date& origin) const {
  return build_model(layout, effective_params(), influence, origin);
}

void ModelConfig::validate() const {
  layout.validate();
  influence.validate();
  effective_params().validate();
  (void)default_priors(layout, priors);
}

}  // namespace climssm::model
