#include "gcfest/optim.hpp"

#include <cmath>
#include <limits>

namespace gcfest {

namespace {

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double rel_step, int& evals) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd g(n);
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = rel_step * std::max(1.0, std::abs(x[i]));
    xp[i] = x[i] + h;
    const double fp = f(xp);
    xp[i] = x[i] - h;
    const double fm = f(xp);
    xp[i] = x[i];
    evals += 2;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace

BfgsResult minimize_bfgs(const std::function<double(const Eigen::VectorXd&)>& f,
                         Eigen::VectorXd x0, const BfgsOptions& options) {
  const Eigen::Index n = x0.size();
  BfgsResult res;
  res.x = x0;
  res.value = f(x0);
  res.evaluations = 1;

  if (!std::isfinite(res.value)) {
    return res;  // nothing sensible to do from an infeasible start
  }

  Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd x = x0;
  double fx = res.value;
  Eigen::VectorXd g = fd_gradient(f, x, options.fd_step, res.evaluations);

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    res.iterations = iter;
    res.gradient_norm = g.cwiseAbs().maxCoeff();
    if (res.gradient_norm <= options.gradient_tol) {
      res.converged = true;
      break;
    }

    Eigen::VectorXd d = -(h_inv * g);
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      // Curvature information went bad; restart from steepest descent.
      h_inv.setIdentity();
      d = -g;
      slope = g.dot(d);
    }

    // Armijo backtracking.
    double step = 1.0;
    double f_new = std::numeric_limits<double>::infinity();
    Eigen::VectorXd x_new;
    bool accepted = false;
    for (int ls = 0; ls < 50; ++ls) {
      x_new = x + step * d;
      f_new = f(x_new);
      ++res.evaluations;
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      break;  // no descent along d at any tried step; declare flatness
    }

    const Eigen::VectorXd s = x_new - x;
    Eigen::VectorXd g_new = fd_gradient(f, x_new, options.fd_step, res.evaluations);
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd i_mat = Eigen::MatrixXd::Identity(n, n);
      const Eigen::MatrixXd left = i_mat - rho * s * y.transpose();
      h_inv = left * h_inv * left.transpose() + rho * s * s.transpose();
    }

    x = x_new;
    fx = f_new;
    g = g_new;
    if (fx < res.value) {
      res.value = fx;
      res.x = x;
    }
    if (s.cwiseAbs().maxCoeff() <= options.step_tol) {
      res.converged = true;
      res.gradient_norm = g.cwiseAbs().maxCoeff();
      break;
    }
  }

  if (!res.converged) {
    res.gradient_norm = g.cwiseAbs().maxCoeff();
  }
  if (fx < res.value) {
    res.value = fx;
    res.x = x;
  }
  return res;
}

}  // namespace gcfest
