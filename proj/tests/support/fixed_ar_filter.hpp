#pragma once

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "climssm/calendar.hpp"
#include "climssm/model.hpp"
#include "climssm/timeseries.hpp"

namespace climssm::testing {

struct FixedArResult {
  double log_likelihood = 0.0;
  std::vector<Eigen::VectorXd> filtered;  // reduced state: mu, beta, psi pairs, lags, delta
};

// Textbook Kalman filter for the composite model with known autoregressive
// coefficients: the phi coordinates are dropped and enter the transition
// matrix as constants. Mean-shift or no forcing only.
inline FixedArResult fixed_ar_filter(const model::StateLayout& layout, const model::ModelParams& params,
                                     const model::InfluenceFunction& fn, const Date& origin,
                                     const Eigen::VectorXd& phi, const Eigen::VectorXd& m0_full,
                                     const Eigen::VectorXd& v0_full, std::span<const double> y) {
  const int K = layout.K, P = layout.P;
  const bool forced = layout.kind == model::ForcingKind::mean_shift;
  const Eigen::Index n = 2 + 2 * K + P + (forced ? 1 : 0);
  const Eigen::Index lag0 = 2 + 2 * K;
  const Eigen::Index d = lag0 + P;

  std::vector<Eigen::Index> map;  // reduced -> full coordinate
  for (Eigen::Index i = 0; i < lag0 + P; ++i) map.push_back(i);
  if (forced) map.push_back(layout.delta());

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  A(0, 0) = 1.0;
  A(0, 1) = 1.0;
  A(1, 1) = 1.0;
  for (int k = 1; k <= K; ++k) {
    const double c = std::cos(k * kOmega), s = std::sin(k * kOmega);
    const Eigen::Index i = 2 + 2 * (k - 1);
    A(i, i) = c;
    A(i, i + 1) = s;
    A(i + 1, i) = -s;
    A(i + 1, i + 1) = c;
  }
  for (int p = 1; p <= P; ++p) A(lag0, lag0 + p - 1) = phi(p - 1);
  for (int j = 1; j < P; ++j) A(lag0 + j, lag0 + j - 1) = 1.0;
  if (forced) A(d, d) = params.varphi;

  const double w_psi = params.W_psi;
  Eigen::VectorXd m(n), P0(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m(i) = m0_full(map[static_cast<std::size_t>(i)]);
    P0(i) = v0_full(map[static_cast<std::size_t>(i)]);
  }
  Eigen::MatrixXd C = P0.asDiagonal();

  FixedArResult out;
  (void)0;
  for (std::size_t t = 1; t <= y.size(); ++t) {
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
    Q(0, 0) = params.W_mu;
    Q(1, 1) = params.W_beta;
    for (Eigen::Index i = 2; i < lag0; ++i) Q(i, i) = w_psi;
    Q(lag0, lag0) = model::seasonal_variance(params, static_cast<long>(t));
    if (forced) Q(d, d) = params.W_delta;
    m = A * m;
    C = A * C * A.transpose() + Q;

    Eigen::RowVectorXd H = Eigen::RowVectorXd::Zero(n);
    H(0) = 1.0;
    for (int k = 1; k <= K; ++k) H(2 + 2 * (k - 1)) = 1.0;
    H(lag0) = 1.0;
    if (forced) H(d) = fn(add_days(origin, static_cast<long>(t) - 1));

    const double obs = y[t - 1];
    if (!std::isnan(obs)) {
      const double F = (H * C * H.transpose())(0, 0) + params.V;
      const double e = obs - H.dot(m);
      const Eigen::VectorXd gain = C * H.transpose() / F;
      m += gain * e;
      C -= gain * (H * C);
      out.log_likelihood += -0.5 * (std::log(2.0 * M_PI) + std::log(F) + e * e / F);
    }
    Eigen::VectorXd full = Eigen::VectorXd::Zero(layout.dim());
    for (Eigen::Index i = 0; i < n; ++i) full(map[static_cast<std::size_t>(i)]) = m(i);
    for (int p = 1; p <= P; ++p) full(layout.phi(p)) = phi(p - 1);
    out.filtered.push_back(std::move(full));
  }
  return out;
}

}  // namespace climssm::testing
