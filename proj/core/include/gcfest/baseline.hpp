#ifndef GCFEST_BASELINE_HPP
#define GCFEST_BASELINE_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gcfest/frame.hpp"
#include "gcfest/gcf.hpp"
#include "gcfest/result.hpp"

namespace gcfest {

// Two-step proxy-variable comparison estimator.  First stage: regress
// lagged output on a polynomial in the instruments.  Second stage: GMM on
// E[q_t - f(k_t,v_t;theta) - g(omega_hat_{t-1}) | z] = 0, where
// omega_hat_{t-1} = E_hat[q_{t-1}|x_{t-1}] - f(k_{t-1},v_{t-1};theta) and
// g is a univariate Hermite polynomial whose coefficients are
// concentrated out linearly at each theta.
struct BaselineConfig {
  int first_stage_degree = 4;
  int g_degree = 4;
  InstrumentPlan plan{};  // instruments and phi(z) degree shared with the
                          // control-function estimator

  void validate() const;
};

// Least-squares fit of q_{t-1} on the Hermite basis of the named frame
// columns.  Returns fitted values row-aligned with the frame.
Eigen::VectorXd first_stage(const EstimationFrame& frame,
                            const std::vector<std::string>& x_vars, int degree);

EstimationResult estimate_baseline(const FirmPanel& panel, const BaselineConfig& config,
                                   const EstimateOptions& options);

}  // namespace gcfest

#endif
