#pragma once

#include <functional>
#include <string>

#include <Eigen/Core>

namespace climssm::optim {

enum class Status { converged, max_iterations, line_search_failure };
std::string to_string(Status status);

using Objective = std::function<double(const Eigen::VectorXd&)>;

struct BfgsOptions {
  int max_iterations = 500;
  // stop when |grad|_inf < gradient_tolerance * max(1, |f|)
  double gradient_tolerance = 1e-5;
  // central-difference step relative to max(1, |x_i|)
  double fd_step = 1e-5;
  // longest step allowed along a search direction
  double max_step = 5.0;
};

struct BfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
  Status status = Status::max_iterations;
  int iterations = 0;
  int evaluations = 0;
};

Eigen::VectorXd central_gradient(const Objective& f, const Eigen::VectorXd& x, double rel_step,
                                 int* evaluations = nullptr);

// Quasi-Newton minimisation: BFGS inverse-Hessian updates, backtracking line
// search that extends full steps failing the Wolfe curvature test, finite-difference
// gradients. Never returns a point worse than x0.
BfgsResult minimize_bfgs(const Objective& f, const Eigen::VectorXd& x0, const BfgsOptions& options = {});

}  // namespace climssm::optim
