#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "climssm/calendar.hpp"
#include "climssm/ssm.hpp"

namespace climssm::model {

enum class ForcingKind { none, mean_shift, ac_shift };

std::string to_string(ForcingKind kind);
ForcingKind parse_forcing_kind(std::string_view text);

// Annual window gating the forced component. Anchored to a calendar start
// (month, day); rises linearly over `taper_days`, stays at 1 on the plateau
// and falls linearly to 0 at `length_days` after the start.
struct InfluenceFunction {
  unsigned start_month = 11;
  unsigned start_day = 1;
  int length_days = 165;
  int taper_days = 30;

  double operator()(const Date& date) const;
  void validate() const;
  std::string describe() const;

  friend bool operator==(const InfluenceFunction&, const InfluenceFunction&) = default;
};

// Forced periods starting on the first of each month with the given lengths
// (default 90..330 days in 30-day steps, 30-day tapers: 108 functions).
std::vector<InfluenceFunction> influence_family(std::vector<int> lengths = {},
                                                std::vector<unsigned> start_months = {},
                                                int taper_days = 30);

struct ModelParams {
  double V = 2.5e-5;        // observation error, hPa^2
  double W_mu = 3.5e-8;     // hPa^2
  double W_beta = 2.8e-12;  // (hPa/day)^2
  double W_psi = 3.5e-8;    // hPa^2
  double W_X = 2.39;        // hPa^2
  double a_X = 0.39;
  double b_X = 1.64;
  double W_phi = 6.1e-12;
  double W_delta = 0.13;
  double varphi = 0.995;

  void validate() const;
  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// W_X + sqrt(a^2 + b^2) + a sin(w t) + b cos(w t).
double seasonal_variance(const ModelParams& params, long t);

// Coordinate map of the composite state:
//   mu, beta, (psi_k, psi*_k) k=1..K, X_t, X_{t-1}, ..., phi_1..phi_P, delta...
// The lag block holds X_t..X_{t-P+1}; the autocorrelation-shift layout keeps
// one more lag (X_{t-P}) because its observation needs X_{t-1}..X_{t-P}.
struct StateLayout {
  int K = 2;
  int P = 6;
  ForcingKind kind = ForcingKind::mean_shift;

  Eigen::Index mu() const { return 0; }
  Eigen::Index beta() const { return 1; }
  Eigen::Index psi(int k) const { return 2 + 2 * (k - 1); }       // k = 1..K
  Eigen::Index psi_star(int k) const { return 3 + 2 * (k - 1); }  // k = 1..K
  int lag_count() const { return kind == ForcingKind::ac_shift ? P + 1 : P; }
  Eigen::Index lag(int p) const { return 2 + 2 * K + p; }  // p = 0 is X_t
  Eigen::Index phi(int p) const { return 2 + 2 * K + lag_count() + (p - 1); }  // p = 1..P
  int delta_count() const;
  Eigen::Index delta(int p = 1) const { return 2 + 2 * K + lag_count() + P + (p - 1); }
  Eigen::Index dim() const { return 2 + 2 * K + lag_count() + P + delta_count(); }

  std::vector<std::string> coordinate_names() const;
  void validate() const;
  friend bool operator==(const StateLayout&, const StateLayout&) = default;
};

struct Prior {
  double mean = 0.0;
  double variance = 1.0;
  friend bool operator==(const Prior&, const Prior&) = default;
};

// Initial-state prior settings per component.
struct PriorSpec {
  Prior mu{6.0, 4.0};
  Prior beta{0.0, 0.002 * 0.002};
  Prior psi1{0.0, 9.0};
  Prior psi{0.0, 4.0};  // k >= 2
  Prior X{0.0, 100.0};
  Prior phi{0.0, 1.0};
  std::vector<double> phi_means;  // per-lag overrides of phi.mean
  Prior delta{0.0, 25.0};
  Prior delta_ac{0.0, 0.04};
  friend bool operator==(const PriorSpec&, const PriorSpec&) = default;
};

struct StatePriors {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
  ssm::GaussianState to_state() const;
};

StatePriors default_priors(const StateLayout& layout, const PriorSpec& spec = {});

double influence(const InfluenceFunction& fn, const Date& date);

// Composite model as engine callbacks; `origin` is the date of day index 1.
ssm::ModelFunctions build_model(const StateLayout& layout, const ModelParams& params,
                                const InfluenceFunction& fn, const Date& origin);

// Everything needed to rebuild a model from text.
struct ModelConfig {
  StateLayout layout;
  InfluenceFunction influence;
  bool tie_psi = true;
  ModelParams params;
  PriorSpec priors;
  std::vector<std::string> fixed;  // parameter names held fixed when fitting

  // params with W_psi tied to W_mu when requested
  ModelParams effective_params() const;
  ssm::ModelFunctions build(const Date& origin) const;
  StatePriors state_priors() const { return default_priors(layout, priors); }
  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Flat key = value text with '#' comments. Unknown keys are errors.
ModelConfig read_config(std::istream& in);
ModelConfig load_config(const std::filesystem::path& path);
void write_config(const ModelConfig& config, std::ostream& out);
void save_config(const ModelConfig& config, const std::filesystem::path& path);

}  // namespace climssm::model
