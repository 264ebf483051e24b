#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "climssm/calendar.hpp"
#include "climssm/model.hpp"
#include "climssm/random.hpp"
#include "climssm/ssm.hpp"
#include "climssm/timeseries.hpp"

namespace climssm::testing {

// Stationary NAO-like weather coefficients for P = 6.
inline std::vector<double> nao_like_phi(int P) {
  const std::vector<double> base{0.85, -0.12, 0.06, -0.02, 0.02, 0.01};
  std::vector<double> out(static_cast<std::size_t>(P), 0.0);
  for (int p = 0; p < P && p < static_cast<int>(base.size()); ++p) out[static_cast<std::size_t>(p)] = base[static_cast<std::size_t>(p)];
  return out;
}

struct TruthState {
  double mu = 6.0;
  double beta = 0.0;
  std::vector<double> psi{2.0, 1.0, 0.5, 0.5};  // (psi_1, psi*_1, psi_2, psi*_2, ...)
  std::vector<double> phi;                      // empty: nao_like_phi
  double delta = 0.0;
};

inline Eigen::VectorXd truth_vector(const model::StateLayout& layout, const TruthState& s = {}) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(layout.dim());
  x(layout.mu()) = s.mu;
  x(layout.beta()) = s.beta;
  for (int k = 1; k <= layout.K; ++k) {
    const auto i = static_cast<std::size_t>(2 * (k - 1));
    if (i + 1 < s.psi.size()) {
      x(layout.psi(k)) = s.psi[i];
      x(layout.psi_star(k)) = s.psi[i + 1];
    }
  }
  const auto phi = s.phi.empty() ? nao_like_phi(layout.P) : s.phi;
  for (int p = 1; p <= layout.P; ++p) x(layout.phi(p)) = phi[static_cast<std::size_t>(p - 1)];
  for (int p = 1; p <= layout.delta_count(); ++p) x(layout.delta(p)) = s.delta;
  return x;
}

// One realisation of the configured model started from a fixed state.
inline DailySeries simulate_series(const model::ModelConfig& config, const Date& start, long days,
                                   std::uint64_t seed, const Eigen::VectorXd& x0,
                                   Eigen::MatrixXd* states = nullptr) {
  const auto fn = config.build(start);
  Rng rng = make_stream(seed, 0);
  const Eigen::VectorXd y = ssm::simulate_path(fn, x0, 1, days, rng, states);
  return DailySeries(start, std::vector<double>(y.data(), y.data() + y.size()));
}

inline DailySeries simulate_series(const model::ModelConfig& config, const Date& start, long days,
                                   std::uint64_t seed) {
  return simulate_series(config, start, days, seed, truth_vector(config.layout));
}

// AR(1) series with unit innovation variance.
inline std::vector<double> ar1(std::size_t n, double phi, std::uint64_t seed, double sd = 1.0) {
  Rng rng = make_stream(seed, 0);
  std::vector<double> out(n);
  double x = standard_normal(rng) * sd / std::sqrt(1.0 - phi * phi);
  for (auto& v : out) {
    x = phi * x + sd * standard_normal(rng);
    v = x;
  }
  return out;
}

}  // namespace climssm::testing
