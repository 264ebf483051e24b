#include "climssm/optimizer.hpp"

#include <cmath>
#include <limits>

namespace climssm::optim {

std::string to_string(Status status) {
  switch (status) {
    case Status::converged: return "converged";
    case Status::max_iterations: return "max-iter";
    case Status::line_search_failure: return "line-search-failure";
  }
  return "unknown";
}

Eigen::VectorXd central_gradient(const Objective& f, const Eigen::VectorXd& x, double rel_step,
                                 int* evaluations) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = rel_step * std::max(1.0, std::abs(x(i)));
    probe(i) = x(i) + h;
    const double up = f(probe);
    probe(i) = x(i) - h;
    const double down = f(probe);
    probe(i) = x(i);
    g(i) = (up - down) / (2.0 * h);
  }
  if (evaluations) *evaluations += static_cast<int>(2 * x.size());
  return g;
}

BfgsResult minimize_bfgs(const Objective& f, const Eigen::VectorXd& x0, const BfgsOptions& opt) {
  constexpr double kArmijo = 1e-4;
  constexpr double kCurvature = 0.9;
  constexpr int kMaxBacktracks = 40;
  constexpr int kMaxExpansions = 10;

  const Eigen::Index n = x0.size();
  BfgsResult res;
  res.x = x0;
  res.value = f(x0);
  res.evaluations = 1;
  res.gradient = central_gradient(f, res.x, opt.fd_step, &res.evaluations);

  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
  bool fresh_h = true;

  for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
    if (res.gradient.lpNorm<Eigen::Infinity>() <
        opt.gradient_tolerance * std::max(1.0, std::abs(res.value))) {
      res.status = Status::converged;
      return res;
    }

    Eigen::VectorXd dir = -h * res.gradient;
    double slope = res.gradient.dot(dir);
    if (!(slope < 0.0)) {
      h.setIdentity();
      fresh_h = true;
      dir = -res.gradient;
      slope = res.gradient.dot(dir);
    }
    const double norm = dir.norm();
    if (norm > opt.max_step) {
      dir *= opt.max_step / norm;
      slope *= opt.max_step / norm;
    }

    double alpha = 1.0;
    Eigen::VectorXd trial;
    double f_trial = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int k = 0; k < kMaxBacktracks; ++k) {
      trial = res.x + alpha * dir;
      f_trial = f(trial);
      ++res.evaluations;
      if (std::isfinite(f_trial) && f_trial <= res.value + kArmijo * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      if (!fresh_h) {
        // retry along steepest descent before giving up
        h.setIdentity();
        fresh_h = true;
        --res.iterations;
        continue;
      }
      res.status = Status::line_search_failure;
      return res;
    }

    Eigen::VectorXd g_trial = central_gradient(f, trial, opt.fd_step, &res.evaluations);
    // full step accepted but still descending steeply: extend it while the
    // curvature condition fails and the objective keeps decreasing
    if (alpha == 1.0) {
      for (int k = 0; k < kMaxExpansions && g_trial.dot(dir) < kCurvature * slope; ++k) {
        const double longer = alpha * 2.0;
        if (longer * dir.norm() > opt.max_step) break;
        const Eigen::VectorXd candidate = res.x + longer * dir;
        const double f_candidate = f(candidate);
        ++res.evaluations;
        if (!std::isfinite(f_candidate) || f_candidate > res.value + kArmijo * longer * slope ||
            f_candidate >= f_trial) {
          break;
        }
        alpha = longer;
        trial = candidate;
        f_trial = f_candidate;
        g_trial = central_gradient(f, trial, opt.fd_step, &res.evaluations);
      }
    }
    const Eigen::VectorXd s = trial - res.x;
    const Eigen::VectorXd y = g_trial - res.gradient;
    const double sy = s.dot(y);
    if (sy > 1e-10 * s.norm() * y.norm()) {
      if (fresh_h) {
        h *= sy / y.squaredNorm();
        fresh_h = false;
      }
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd ident = Eigen::MatrixXd::Identity(n, n);
      h = (ident - rho * s * y.transpose()) * h * (ident - rho * y * s.transpose()) +
          rho * s * s.transpose();
    }
    res.x = trial;
    res.value = f_trial;
    res.gradient = g_trial;
  }
  res.status = res.gradient.lpNorm<Eigen::Infinity>() <
                       opt.gradient_tolerance * std::max(1.0, std::abs(res.value))
                   ? Status::converged
                   : Status::max_iterations;
  return res;
}

}  // namespace climssm::optim
