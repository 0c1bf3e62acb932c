#ifndef GCFEST_DGP_HPP
#define GCFEST_DGP_HPP

#include <cstdint>
#include <vector>

#include "gcfest/ces.hpp"

namespace gcfest {

// Stationary description of a scalar AR(1): X_t = c + a X_{t-1} + e_t.
// Parameterized by the stationary moments users actually reason about.
// variance == 0 describes a degenerate process frozen at its mean; the
// noiseless configurations rely on that.
struct ShockProcessParams {
  double mean = 0.0;
  double variance = 0.0;
  double autocorr = 0.0;

  void validate() const;  // throws std::invalid_argument
};

struct Ar1Coefficients {
  double intercept = 0.0;
  double slope = 0.0;
  double innovation_sd = 0.0;
};

// Maps stationary (mean, variance, autocorr) to AR(1) coefficients:
// slope = autocorr, intercept = mean*(1-autocorr),
// innovation_sd = sqrt(variance*(1-autocorr^2)).
Ar1Coefficients solve_ar1(const ShockProcessParams& p);

// Stationary targets for the productivity process omega, which evolves as
//   omega_t = mu + r*omega_{t-1} + b1*delta1_{t-1} + b2*delta2_{t-1} + xi_t
// jointly with the two independent demand-state AR(1)s.
struct MomentTargets {
  double mean = 0.0;
  double variance = 0.0;
  double autocorr = 0.0;
  double corr_delta1 = 0.0;
  double corr_delta2 = 0.0;

  void validate() const;
};

struct LawOfMotionParams {
  double mu = 0.0;
  double rho_omega = 0.0;
  double rho_delta1 = 0.0;
  double rho_delta2 = 0.0;
  double innovation_var = 0.0;
};

// Inverts the stationary moment map in closed form.  Throws
// InfeasibleError when no coefficient vector attains the targets (|r|>=1,
// negative innovation variance, correlation targets outside the positive
// semidefinite region, or correlation with a degenerate delta process).
LawOfMotionParams solve_law_of_motion(const MomentTargets& targets,
                                      const ShockProcessParams& delta1,
                                      const ShockProcessParams& delta2);

struct DGPConfig {
  StructuralParams structural{0.3, -1.0, 0.95};
  ShockProcessParams shock_pK{0.0, 0.25, 0.7};
  ShockProcessParams shock_pV{0.0, 0.25, 0.7};
  ShockProcessParams shock_delta1{10.0, 25.0, 0.7};
  ShockProcessParams shock_delta2{-1.3543, 0.25, 0.7};
  MomentTargets targets{0.0, 0.25, 0.7, 0.3, -0.3};
  double eps_sd = 0.5;
  int n_firms = 5000;
  int n_periods = 20;
  int burn_in = 20;
  std::uint64_t seed = 1;

  void validate() const;
};

// Everything simulate_panel derives from a DGPConfig before the first draw.
struct SolvedProcesses {
  Ar1Coefficients pK, pV, delta1, delta2;
  LawOfMotionParams lom;
};

SolvedProcesses solve_processes(const DGPConfig& config);

// Balanced panel in firm-major, period-minor layout.  Latent columns are
// populated by the simulator and may be absent (empty vectors) on panels
// read back from disk without them.
struct FirmPanel {
  int n_firms = 0;
  int n_periods = 0;
  std::vector<double> q, p, k, v, pK, pV;                       // observed
  std::vector<double> q_star, omega, delta1, delta2, xi, eps;   // latent

  std::size_t idx(int firm, int t) const {
    return static_cast<std::size_t>(firm) * n_periods + t;
  }
  std::size_t size() const { return q.size(); }
  bool has_latents() const { return !omega.empty(); }
};

struct VariableInputSolution {
  double v = 0.0;
  double p = 0.0;
  double q_star = 0.0;
};

// Static profit maximization over the flexible input with capital fixed:
//   max_V  P*Q - exp(pV)*V  subject to the production function and the
// demand curve, solved on the log scale.  Throws SolverError when the
// problem has no interior optimum (requires sigmoid(-delta2)*nu < 1 when
// rho > 0).
VariableInputSolution solve_variable_input(const StructuralParams& sp, double k,
                                           double omega, const DemandState& demand,
                                           double pV);

// The information set on which period-t capital is chosen: everything
// dated t-1.
struct PriorState {
  double omega = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double pV = 0.0;
  double pK = 0.0;
};

// Certainty-equivalent capital choice: uncertain period-t states are
// replaced by their conditional means given the prior state, capital is
// paid at the observed lagged price, and the joint (k, v) plan is solved.
// The planned v collapses to a linear equation along the optimal k-v ray,
// so the solution is closed-form.  Only k is carried into the simulation;
// the flexible input is re-optimized once the true states realize.
double solve_capital(const StructuralParams& sp, const PriorState& prior,
                     const SolvedProcesses& solved);

FirmPanel simulate_panel(const DGPConfig& config);

}  // namespace gcfest

#endif
