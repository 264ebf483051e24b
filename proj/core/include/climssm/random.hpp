#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace climssm {

using Rng = std::mt19937_64;

// Independent engine for (seed, stream...) so that work split across members,
// years or threads draws the same numbers regardless of scheduling.
Rng make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0);

inline double standard_normal(Rng& rng) {
  return std::normal_distribution<double>{}(rng);
}

void fill_standard_normal(Rng& rng, Eigen::Ref<Eigen::VectorXd> z);

// Lower factor L with L L^T = cov for a symmetric positive semidefinite
// matrix. Falls back to a pivoted LDL^T with clamped pivots when Cholesky
// fails; diagonal inputs take a square-root shortcut.
Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& cov);

}  // namespace climssm
