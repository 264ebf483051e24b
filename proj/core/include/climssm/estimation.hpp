#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "climssm/calendar.hpp"
#include "climssm/model.hpp"
#include "climssm/optimizer.hpp"
#include "climssm/timeseries.hpp"

namespace climssm::estimation {

// Bijection between the free parameters of a configuration and R^k: log
// scale for variances, identity for a_X and b_X, logit for varphi. Which
// parameters are free depends on the forcing kind, the W_psi tie and the
// configuration's fixed list.
class ParamTransform {
 public:
  explicit ParamTransform(const model::ModelConfig& config);

  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }

  Eigen::VectorXd to_unconstrained(const model::ModelParams& params) const;
  // Free entries from `x`, the rest from `base`.
  model::ModelParams to_params(const Eigen::VectorXd& x, const model::ModelParams& base) const;

 private:
  std::vector<std::string> names_;
};

inline constexpr double kDivergenceSentinel = 1e10;

// Negative log-likelihood at unconstrained parameters; a filter breakdown
// maps to kDivergenceSentinel plus a penalty growing with |x|.
double negloglik(const Eigen::VectorXd& x, const model::ModelConfig& config,
                 const ParamTransform& transform, const DailySeries& data);

struct FitOptions {
  optim::BfgsOptions bfgs;
};

struct FitReport {
  model::ModelConfig config;  // estimated parameters
  std::vector<std::string> free_parameters;
  double log_likelihood = 0.0;
  int k = 0;       // number of optimised scalar parameters
  long n = 0;      // number of observed values
  double bic = 0.0;
  optim::Status status = optim::Status::max_iterations;
  int iterations = 0;
  int evaluations = 0;
};

double bic(int k, long n, double log_likelihood);

FitReport fit_mle(const model::ModelConfig& initial, const DailySeries& data, const FitOptions& options = {});

void write_report(const FitReport& report, std::ostream& out);
// Parses the key/value report back (structure fields only, not the config).
struct ReportSummary {
  double log_likelihood = 0.0;
  int k = 0;
  long n = 0;
  double bic = 0.0;
  std::string status;
  int iterations = 0;
};
ReportSummary read_report(std::istream& in);

struct GridOptions {
  FitOptions fit;
  unsigned threads = 1;
  bool include_null = true;
};

struct GridRow {
  model::ForcingKind kind = model::ForcingKind::none;
  std::optional<model::InfluenceFunction> influence;  // empty for the null model
  std::size_t order = 0;                              // position in the family
  bool failed = false;
  std::string message;
  FitReport report;
};

// One fit per (forcing kind x influence function) plus the no-forcing
// reference, sorted by BIC ascending; ties keep family order.
std::vector<GridRow> grid_search(const DailySeries& data, const model::ModelConfig& base,
                                 const std::vector<model::InfluenceFunction>& family,
                                 const std::vector<model::ForcingKind>& kinds,
                                 const GridOptions& options = {});

// Columns: start_month,length_days,forcing_kind,loglik,k,bic,status
void write_grid_csv(const std::vector<GridRow>& rows, std::ostream& out);

// Classical potential-predictability partition for one season: within-
// season AR(1) fit and the implied variance of a seasonal mean of AR(1)
// noise compared with the observed inter-annual variance.
struct ClassicalPP {
  double forced_fraction = 0.0;
  double noise_fraction = 1.0;
  double phi = 0.0;
  double innovation_variance = 0.0;
  double observed_variance = 0.0;  // inter-annual variance of seasonal means
  double implied_variance = 0.0;   // from AR(1) weather noise alone
  int seasons = 0;
};

ClassicalPP classical_pp(const DailySeries& deseasonalized, const Season& season);

}  // namespace climssm::estimation
