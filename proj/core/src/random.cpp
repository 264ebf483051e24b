#include "climssm/random.hpp"

#include <Eigen/Cholesky>

namespace climssm {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

Rng make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream) {
  std::uint64_t state = seed;
  std::uint64_t words[4];
  words[0] = splitmix64(state);
  state ^= stream * 0xD1B54A32D192ED03ULL;
  words[1] = splitmix64(state);
  state ^= substream * 0xABC98388FB8FAC03ULL;
  words[2] = splitmix64(state);
  words[3] = splitmix64(state);
  std::seed_seq seq{static_cast<std::uint32_t>(words[0]), static_cast<std::uint32_t>(words[0] >> 32),
                    static_cast<std::uint32_t>(words[1]), static_cast<std::uint32_t>(words[1] >> 32),
                    static_cast<std::uint32_t>(words[2]), static_cast<std::uint32_t>(words[2] >> 32),
                    static_cast<std::uint32_t>(words[3]), static_cast<std::uint32_t>(words[3] >> 32)};
  return Rng(seq);
}

void fill_standard_normal(Rng& rng, Eigen::Ref<Eigen::VectorXd> z) {
  std::normal_distribution<double> dist;
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = dist(rng);
}

Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& cov) {
  const Eigen::MatrixXd off = cov - Eigen::MatrixXd(cov.diagonal().asDiagonal());
  if (off.isZero(0.0)) {
    return cov.diagonal().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) {
    Eigen::MatrixXd l = llt.matrixL();
    if (l.allFinite()) return l;
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
  Eigen::MatrixXd l = ldlt.matrixL();
  const Eigen::VectorXd d = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
  l = l * d.asDiagonal();
  Eigen::MatrixXd factor = ldlt.transpositionsP().transpose() * l;
  return factor;
}

}  // namespace climssm
