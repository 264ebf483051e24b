#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "climssm/random.hpp"
#include "climssm/timeseries.hpp"

namespace climssm::ssm {

struct GaussianState {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  Eigen::Index dim() const { return mean.size(); }
  static GaussianState point(Eigen::VectorXd mean);
};

// One-step transition linearised at a state: f(x), df/dx and the process
// noise covariance of the step.
struct TransitionEval {
  Eigen::VectorXd mean;
  Eigen::MatrixXd jacobian;
  Eigen::MatrixXd noise;
};

// Scalar observation linearised at a state: h(x), dh/dx and the
// observation-error variance.
struct ObservationEval {
  double mean = 0.0;
  Eigen::RowVectorXd gradient;
  double variance = 0.0;
};

// A conditionally Gaussian state-space model. Time t = 1..T; the prior
// describes the state at t = 0 and transition(t, x) maps the state at t - 1
// to the state at t. Callbacks write into preallocated outputs.
struct ModelFunctions {
  Eigen::Index dim = 0;
  std::function<void(long t, const Eigen::VectorXd& state, TransitionEval& out)> transition;
  std::function<void(long t, const Eigen::VectorXd& state, ObservationEval& out)> observation;
  std::vector<std::string> coordinate_names;
};

struct StepOutcome {
  bool observed = false;
  double innovation = 0.0;
  double innovation_variance = 0.0;
  double log_likelihood = 0.0;
};

// Incremental extended Kalman filter. Each step() predicts to the next time
// and, when the observation is present, performs a Joseph-form update.
class KalmanStepper {
 public:
  KalmanStepper(const ModelFunctions& model, GaussianState prior);

  StepOutcome step(double observation);

  long time() const { return t_; }
  const GaussianState& predicted() const { return predicted_; }
  const GaussianState& filtered() const { return filtered_; }

 private:
  const ModelFunctions* model_;
  long t_ = 0;
  GaussianState predicted_;
  GaussianState filtered_;
  TransitionEval tev_;
  ObservationEval oev_;
  Eigen::MatrixXd work_;
  Eigen::VectorXd gain_;
};

struct FilterResult {
  GaussianState prior;
  std::vector<GaussianState> predicted;  // index i <-> t = i + 1
  std::vector<GaussianState> filtered;
  std::vector<double> innovation;           // NaN on missing steps
  std::vector<double> innovation_variance;  // NaN on missing steps
  double log_likelihood = 0.0;

  std::size_t steps() const { return filtered.size(); }
};

FilterResult ekf_filter(const ModelFunctions& model, const GaussianState& prior,
                        std::span<const double> observations);
FilterResult ekf_filter(const ModelFunctions& model, const GaussianState& prior,
                        const DailySeries& observations);

// Prediction-error log-likelihood without storing per-step states.
double log_likelihood(const ModelFunctions& model, const GaussianState& prior,
                      std::span<const double> observations);

// Filtered states at selected zero-based step indices (sorted ascending);
// index -1 denotes the prior.
std::vector<GaussianState> filter_checkpoints(const ModelFunctions& model, const GaussianState& prior,
                                              std::span<const double> observations,
                                              std::span<const long> indices);

std::vector<GaussianState> rts_smooth(const ModelFunctions& model, const FilterResult& filter);

// Sampled state paths: member m has a T x n matrix, row i <-> t = i + 1.
struct TrajectoryEnsemble {
  std::vector<Eigen::MatrixXd> paths;
  std::vector<std::string> coordinate_names;

  std::size_t members() const { return paths.size(); }
  Eigen::Index steps() const { return paths.empty() ? 0 : paths.front().rows(); }
  Eigen::Index dim() const { return paths.empty() ? 0 : paths.front().cols(); }
  void append(TrajectoryEnsemble&& other);
};

// Forward-filtering backward-sampling under the linearised model. Member m
// draws from make_stream(seed, first_member + m), so batches concatenate to
// the same ensemble as one large call.
TrajectoryEnsemble sample_trajectories(const ModelFunctions& model, const FilterResult& filter,
                                       std::size_t members, std::uint64_t seed,
                                       std::size_t first_member = 0);

struct Simulation {
  TrajectoryEnsemble states;       // empty when states were not kept
  Eigen::MatrixXd observations;    // members x T
};

// Draws the initial state from `initial` (zero covariance = fixed state),
// iterates the transition with process noise and emits noisy observations.
Simulation simulate(const ModelFunctions& model, const GaussianState& initial, long steps,
                    std::size_t members, std::uint64_t seed, bool keep_states = true);

// Single realisation; `states` (T x n) is filled when non-null. The
// observation noise is added only when `observation_noise` is true.
Eigen::VectorXd simulate_path(const ModelFunctions& model, const Eigen::VectorXd& initial_state,
                              long first_t, long steps, Rng& rng, Eigen::MatrixXd* states = nullptr,
                              bool observation_noise = true);

Eigen::VectorXd draw(const GaussianState& state, Rng& rng);

// CSV dump with columns t,member,<coordinate names>.
void write_trajectories_csv(const TrajectoryEnsemble& ensemble, std::ostream& out);
TrajectoryEnsemble read_trajectories_csv(std::istream& in);

}  // namespace climssm::ssm
