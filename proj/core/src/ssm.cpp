#include "climssm/ssm.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "climssm/error.hpp"

namespace climssm::ssm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void symmetrize(Eigen::MatrixXd& m) {
  m = 0.5 * (m + m.transpose()).eval();
}

void check_dims(const ModelFunctions& model, const GaussianState& prior) {
  if (!model.transition || !model.observation) {
    throw std::invalid_argument("model functions are not set");
  }
  if (prior.mean.size() != model.dim || prior.cov.rows() != model.dim ||
      prior.cov.cols() != model.dim) {
    throw std::invalid_argument("prior dimension does not match the model");
  }
}

// Cholesky of a predicted covariance; one jitter retry of 1e-12 * trace.
Eigen::LLT<Eigen::MatrixXd> factor_predicted(const Eigen::MatrixXd& r) {
  Eigen::LLT<Eigen::MatrixXd> llt(r);
  if (llt.info() == Eigen::Success) return llt;
  const double jitter = 1e-12 * std::max(r.trace(), 0.0);
  Eigen::MatrixXd bumped = r;
  bumped.diagonal().array() += jitter;
  llt.compute(bumped);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("singular predicted covariance in backward pass");
  }
  return llt;
}

// Backward gain G = C_t J' R_{t+1}^{-1}.
Eigen::MatrixXd smoother_gain(const Eigen::MatrixXd& filtered_cov, const Eigen::MatrixXd& jacobian,
                              const Eigen::LLT<Eigen::MatrixXd>& predicted_llt) {
  const Eigen::MatrixXd jc = jacobian * filtered_cov;
  return predicted_llt.solve(jc).transpose();
}

}  // namespace

GaussianState GaussianState::point(Eigen::VectorXd mean) {
  const auto n = mean.size();
  return {std::move(mean), Eigen::MatrixXd::Zero(n, n)};
}

// --- filter --------------------------------------------------------------

KalmanStepper::KalmanStepper(const ModelFunctions& model, GaussianState prior)
    : model_(&model), predicted_(prior), filtered_(std::move(prior)) {
  check_dims(model, filtered_);
  const auto n = model.dim;
  tev_.mean.resize(n);
  tev_.jacobian.resize(n, n);
  tev_.noise.resize(n, n);
  oev_.gradient.resize(n);
  work_.resize(n, n);
  gain_.resize(n);
}

StepOutcome KalmanStepper::step(double y) {
  ++t_;
  model_->transition(t_, filtered_.mean, tev_);
  predicted_.mean = tev_.mean;
  work_.noalias() = tev_.jacobian * filtered_.cov;
  predicted_.cov.noalias() = work_ * tev_.jacobian.transpose();
  predicted_.cov += tev_.noise;
  symmetrize(predicted_.cov);
  if (!predicted_.mean.allFinite() || !predicted_.cov.allFinite()) {
    throw NumericalError("filter diverged at step " + std::to_string(t_));
  }

  StepOutcome outcome;
  if (is_missing(y)) {
    filtered_.mean = predicted_.mean;
    filtered_.cov = predicted_.cov;
    return outcome;
  }

  model_->observation(t_, predicted_.mean, oev_);
  const double e = y - oev_.mean;
  gain_.noalias() = predicted_.cov * oev_.gradient.transpose();  // c = R h'
  const double f = oev_.gradient.dot(gain_) + oev_.variance;
  if (!(f > 0.0) || !std::isfinite(f)) {
    throw NumericalError("non-positive innovation variance at step " + std::to_string(t_));
  }
  const Eigen::VectorXd c = gain_;
  gain_ /= f;  // k = c / F
  filtered_.mean = predicted_.mean + gain_ * e;
  // Joseph form (I - k h) R (I - k h)' + V k k' expanded for a scalar
  // observation: R - k c' - c k' + F k k'.
  filtered_.cov = predicted_.cov;
  filtered_.cov.noalias() -= gain_ * c.transpose();
  filtered_.cov.noalias() -= c * gain_.transpose();
  filtered_.cov.noalias() += (f * gain_) * gain_.transpose();
  symmetrize(filtered_.cov);
  if (!filtered_.mean.allFinite()) {
    throw NumericalError("filter diverged at step " + std::to_string(t_));
  }

  outcome.observed = true;
  outcome.innovation = e;
  outcome.innovation_variance = f;
  outcome.log_likelihood = -0.5 * (kLog2Pi + std::log(f) + e * e / f);
  return outcome;
}

FilterResult ekf_filter(const ModelFunctions& model, const GaussianState& prior,
                        std::span<const double> observations) {
  KalmanStepper stepper(model, prior);
  FilterResult out;
  out.prior = prior;
  const std::size_t steps = observations.size();
  out.predicted.reserve(steps);
  out.filtered.reserve(steps);
  out.innovation.reserve(steps);
  out.innovation_variance.reserve(steps);
  for (double y : observations) {
    const StepOutcome o = stepper.step(y);
    out.predicted.push_back(stepper.predicted());
    out.filtered.push_back(stepper.filtered());
    out.innovation.push_back(o.observed ? o.innovation : kMissing);
    out.innovation_variance.push_back(o.observed ? o.innovation_variance : kMissing);
    out.log_likelihood += o.log_likelihood;
  }
  return out;
}

FilterResult ekf_filter(const ModelFunctions& model, const GaussianState& prior,
                        const DailySeries& observations) {
  return ekf_filter(model, prior, observations.values());
}

double log_likelihood(const ModelFunctions& model, const GaussianState& prior,
                      std::span<const double> observations) {
  KalmanStepper stepper(model, prior);
  double ll = 0.0;
  for (double y : observations) ll += stepper.step(y).log_likelihood;
  return ll;
}

std::vector<GaussianState> filter_checkpoints(const ModelFunctions& model, const GaussianState& prior,
                                              std::span<const double> observations,
                                              std::span<const long> indices) {
  std::vector<GaussianState> out;
  out.reserve(indices.size());
  KalmanStepper stepper(model, prior);
  std::size_t next = 0;
  while (next < indices.size() && indices[next] < 0) {
    out.push_back(prior);
    ++next;
  }
  for (std::size_t i = 0; i < observations.size() && next < indices.size(); ++i) {
    stepper.step(observations[i]);
    while (next < indices.size() && indices[next] == static_cast<long>(i)) {
      out.push_back(stepper.filtered());
      ++next;
    }
  }
  if (next != indices.size()) throw std::out_of_range("checkpoint beyond the observation span");
  return out;
}

// --- smoother and sampler ------------------------------------------------

std::vector<GaussianState> rts_smooth(const ModelFunctions& model, const FilterResult& filter) {
  const std::size_t steps = filter.steps();
  std::vector<GaussianState> smoothed(steps);
  if (steps == 0) return smoothed;
  smoothed.back() = filter.filtered.back();
  TransitionEval tev;
  tev.mean.resize(model.dim);
  tev.jacobian.resize(model.dim, model.dim);
  tev.noise.resize(model.dim, model.dim);
  for (std::size_t i = steps - 1; i-- > 0;) {
    const auto& f = filter.filtered[i];
    const auto& p = filter.predicted[i + 1];
    model.transition(static_cast<long>(i) + 2, f.mean, tev);
    const auto llt = factor_predicted(p.cov);
    const Eigen::MatrixXd g = smoother_gain(f.cov, tev.jacobian, llt);
    smoothed[i].mean = f.mean + g * (smoothed[i + 1].mean - p.mean);
    smoothed[i].cov = f.cov + g * (smoothed[i + 1].cov - p.cov) * g.transpose();
    symmetrize(smoothed[i].cov);
  }
  return smoothed;
}

void TrajectoryEnsemble::append(TrajectoryEnsemble&& other) {
  if (paths.empty() && coordinate_names.empty()) coordinate_names = std::move(other.coordinate_names);
  for (auto& p : other.paths) paths.push_back(std::move(p));
}

TrajectoryEnsemble sample_trajectories(const ModelFunctions& model, const FilterResult& filter,
                                       std::size_t members, std::uint64_t seed,
                                       std::size_t first_member) {
  const std::size_t steps = filter.steps();
  const Eigen::Index n = model.dim;
  TrajectoryEnsemble ens;
  ens.coordinate_names = model.coordinate_names;
  if (steps == 0 || members == 0) return ens;

  std::vector<Rng> rngs;
  rngs.reserve(members);
  for (std::size_t m = 0; m < members; ++m) rngs.push_back(make_stream(seed, first_member + m));
  ens.paths.assign(members, Eigen::MatrixXd(static_cast<Eigen::Index>(steps), n));

  Eigen::VectorXd z(n);
  {
    const auto& last = filter.filtered.back();
    const Eigen::MatrixXd l = psd_factor(last.cov);
    for (std::size_t m = 0; m < members; ++m) {
      fill_standard_normal(rngs[m], z);
      ens.paths[m].row(static_cast<Eigen::Index>(steps - 1)) = (last.mean + l * z).transpose();
    }
  }

  TransitionEval tev;
  tev.mean.resize(n);
  tev.jacobian.resize(n, n);
  tev.noise.resize(n, n);
  for (std::size_t i = steps - 1; i-- > 0;) {
    const auto& f = filter.filtered[i];
    const auto& p = filter.predicted[i + 1];
    model.transition(static_cast<long>(i) + 2, f.mean, tev);
    const auto llt = factor_predicted(p.cov);
    const Eigen::MatrixXd g = smoother_gain(f.cov, tev.jacobian, llt);
    Eigen::MatrixXd cond = f.cov - g * p.cov * g.transpose();
    symmetrize(cond);
    const Eigen::MatrixXd l = psd_factor(cond);
    const auto row = static_cast<Eigen::Index>(i);
    for (std::size_t m = 0; m < members; ++m) {
      fill_standard_normal(rngs[m], z);
      const Eigen::VectorXd next = ens.paths[m].row(row + 1).transpose();
      ens.paths[m].row(row) = (f.mean + g * (next - p.mean) + l * z).transpose();
    }
  }
  for (const auto& path : ens.paths) {
    if (!path.allFinite()) throw NumericalError("non-finite sampled trajectory");
  }
  return ens;
}

// --- simulation ------------------------------------------------------------

Eigen::VectorXd draw(const GaussianState& state, Rng& rng) {
  Eigen::VectorXd z(state.dim());
  fill_standard_normal(rng, z);
  return state.mean + psd_factor(state.cov) * z;
}

Eigen::VectorXd simulate_path(const ModelFunctions& model, const Eigen::VectorXd& initial_state,
                              long first_t, long steps, Rng& rng, Eigen::MatrixXd* states,
                              bool observation_noise) {
  const Eigen::Index n = model.dim;
  TransitionEval tev;
  tev.mean.resize(n);
  tev.jacobian.resize(n, n);
  tev.noise.resize(n, n);
  ObservationEval oev;
  oev.gradient.resize(n);
  if (states) states->resize(steps, n);

  Eigen::VectorXd x = initial_state;
  Eigen::VectorXd z(n);
  Eigen::VectorXd y(steps);
  std::normal_distribution<double> normal;
  for (long i = 0; i < steps; ++i) {
    const long t = first_t + i;
    model.transition(t, x, tev);
    fill_standard_normal(rng, z);
    const Eigen::MatrixXd& q = tev.noise;
    bool diagonal = true;
    for (Eigen::Index c = 0; c < n && diagonal; ++c) {
      for (Eigen::Index r = 0; r < n; ++r) {
        if (r != c && q(r, c) != 0.0) {
          diagonal = false;
          break;
        }
      }
    }
    if (diagonal) {
      x = tev.mean + (q.diagonal().cwiseMax(0.0).cwiseSqrt().array() * z.array()).matrix();
    } else {
      x = tev.mean + psd_factor(q) * z;
    }
    model.observation(t, x, oev);
    const double noise = std::sqrt(std::max(oev.variance, 0.0)) * normal(rng);
    y(i) = oev.mean + (observation_noise ? noise : 0.0);
    if (states) states->row(i) = x.transpose();
    if (!x.allFinite() || !std::isfinite(y(i))) {
      throw NumericalError("non-finite simulated state at step " + std::to_string(t));
    }
  }
  return y;
}

Simulation simulate(const ModelFunctions& model, const GaussianState& initial, long steps,
                    std::size_t members, std::uint64_t seed, bool keep_states) {
  if (steps < 1) throw std::invalid_argument("simulation needs at least one step");
  if (initial.dim() != model.dim) throw std::invalid_argument("initial state dimension mismatch");
  Simulation sim;
  sim.states.coordinate_names = model.coordinate_names;
  sim.observations.resize(static_cast<Eigen::Index>(members), steps);
  for (std::size_t m = 0; m < members; ++m) {
    Rng rng = make_stream(seed, m);
    const Eigen::VectorXd x0 = draw(initial, rng);
    Eigen::MatrixXd path;
    sim.observations.row(static_cast<Eigen::Index>(m)) =
        simulate_path(model, x0, 1, steps, rng, keep_states ? &path : nullptr).transpose();
    if (keep_states) sim.states.paths.push_back(std::move(path));
  }
  return sim;
}

// --- serialization -----------------------------------------------------------

void write_trajectories_csv(const TrajectoryEnsemble& ensemble, std::ostream& out) {
  const Eigen::Index n = ensemble.dim();
  out << "t,member";
  for (Eigen::Index j = 0; j < n; ++j) {
    const bool named = static_cast<std::size_t>(j) < ensemble.coordinate_names.size();
    out << ',' << (named ? ensemble.coordinate_names[static_cast<std::size_t>(j)]
                         : "x" + std::to_string(j));
  }
  out << '\n';
  for (Eigen::Index i = 0; i < ensemble.steps(); ++i) {
    for (std::size_t m = 0; m < ensemble.members(); ++m) {
      out << i + 1 << ',' << m;
      for (Eigen::Index j = 0; j < n; ++j) out << ',' << format_double(ensemble.paths[m](i, j));
      out << '\n';
    }
  }
}

TrajectoryEnsemble read_trajectories_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty trajectory file");
  TrajectoryEnsemble ens;
  {
    std::stringstream header(line);
    std::string field;
    int col = 0;
    while (std::getline(header, field, ',')) {
      if (col++ >= 2) ens.coordinate_names.push_back(field);
    }
  }
  const auto n = static_cast<Eigen::Index>(ens.coordinate_names.size());
  std::vector<std::vector<std::vector<double>>> rows;  // member -> step -> coords
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::getline(ss, field, ',');
    const long t = std::stol(field);
    std::getline(ss, field, ',');
    const auto m = static_cast<std::size_t>(std::stoul(field));
    std::vector<double> coords;
    while (std::getline(ss, field, ',')) coords.push_back(std::stod(field));
    if (static_cast<Eigen::Index>(coords.size()) != n) throw DataError("trajectory row width mismatch");
    if (rows.size() <= m) rows.resize(m + 1);
    if (static_cast<long>(rows[m].size()) != t - 1) throw DataError("trajectory rows out of order");
    rows[m].push_back(std::move(coords));
  }
  for (const auto& member : rows) {
    Eigen::MatrixXd path(static_cast<Eigen::Index>(member.size()), n);
    for (std::size_t i = 0; i < member.size(); ++i) {
      for (Eigen::Index j = 0; j < n; ++j) path(static_cast<Eigen::Index>(i), j) = member[i][static_cast<std::size_t>(j)];
    }
    ens.paths.push_back(std::move(path));
  }
  return ens;
}

}  // namespace climssm::ssm
