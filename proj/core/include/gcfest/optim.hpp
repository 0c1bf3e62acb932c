#ifndef GCFEST_OPTIM_HPP
#define GCFEST_OPTIM_HPP

#include <functional>

#include <Eigen/Dense>

namespace gcfest {

struct BfgsOptions {
  int max_iterations = 500;
  double gradient_tol = 1e-8;   // stop when max|grad| falls below
  double step_tol = 1e-12;      // stop when max|step| falls below
  double fd_step = 1e-6;        // relative central-difference step
};

struct BfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double gradient_norm = 0.0;  // max|grad| at the returned point
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

// Quasi-Newton minimizer with a BFGS inverse-Hessian approximation,
// central finite-difference gradients, and Armijo backtracking.  The
// objective may signal an infeasible point by returning a non-finite
// value or a huge penalty; the line search backs away from those.
BfgsResult minimize_bfgs(const std::function<double(const Eigen::VectorXd&)>& f,
                         Eigen::VectorXd x0, const BfgsOptions& options = {});

}  // namespace gcfest

#endif
