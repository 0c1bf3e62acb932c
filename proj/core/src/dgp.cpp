#include "gcfest/dgp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "gcfest/errors.hpp"
#include "gcfest/rng.hpp"

namespace gcfest {

namespace {

constexpr std::uint64_t kFirmDomain = 0x46495253ULL;  // per-firm substreams

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

void ShockProcessParams::validate() const {
  require(std::isfinite(mean), "ShockProcessParams: mean must be finite");
  require(variance >= 0.0 && std::isfinite(variance),
          "ShockProcessParams: variance must be >= 0, got " + std::to_string(variance));
  require(std::abs(autocorr) < 1.0,
          "ShockProcessParams: |autocorr| must be < 1, got " + std::to_string(autocorr));
}

Ar1Coefficients solve_ar1(const ShockProcessParams& p) {
  p.validate();
  Ar1Coefficients c;
  c.slope = p.autocorr;
  c.intercept = p.mean * (1.0 - p.autocorr);
  c.innovation_sd = std::sqrt(p.variance * (1.0 - p.autocorr * p.autocorr));
  return c;
}

void MomentTargets::validate() const {
  require(std::isfinite(mean), "MomentTargets: mean must be finite");
  require(variance >= 0.0 && std::isfinite(variance),
          "MomentTargets: variance must be >= 0, got " + std::to_string(variance));
  require(std::abs(autocorr) < 1.0,
          "MomentTargets: |autocorr| must be < 1, got " + std::to_string(autocorr));
  require(std::abs(corr_delta1) < 1.0 && std::abs(corr_delta2) < 1.0,
          "MomentTargets: correlation targets must lie in (-1,1)");
}

LawOfMotionParams solve_law_of_motion(const MomentTargets& targets,
                                      const ShockProcessParams& delta1,
                                      const ShockProcessParams& delta2) {
  targets.validate();
  delta1.validate();
  delta2.validate();

  const double sigma = std::sqrt(targets.variance);
  const double c1 = targets.corr_delta1;
  const double c2 = targets.corr_delta2;

  LawOfMotionParams out;

  if (targets.variance == 0.0) {
    if (c1 != 0.0 || c2 != 0.0) {
      throw InfeasibleError(
          "solve_law_of_motion: a degenerate omega cannot correlate with delta");
    }
    out.mu = targets.mean;
    return out;
  }

  if ((c1 != 0.0 && delta1.variance == 0.0) || (c2 != 0.0 && delta2.variance == 0.0)) {
    throw InfeasibleError(
        "solve_law_of_motion: nonzero correlation target with a degenerate delta process");
  }
  if ((c1 != 0.0 && delta1.autocorr == 0.0) || (c2 != 0.0 && delta2.autocorr == 0.0)) {
    throw InfeasibleError(
        "solve_law_of_motion: a lagged delta loading cannot correlate omega with a "
        "serially uncorrelated delta process");
  }
  // The stationary joint distribution of (omega, delta1, delta2) with
  // independent deltas needs 1 - c1^2 - c2^2 >= 0 to be positive
  // semidefinite.
  const double det = 1.0 - c1 * c1 - c2 * c2;
  if (det < 0.0) {
    throw InfeasibleError(
        "solve_law_of_motion: correlation targets violate positive semidefiniteness "
        "(corr_delta1^2 + corr_delta2^2 > 1)");
  }

  const double a1 = delta1.autocorr;
  const double a2 = delta2.autocorr;
  const double s1 = std::sqrt(delta1.variance);
  const double s2 = std::sqrt(delta2.variance);

  // Stationarity ties the coefficients to the targets in closed form.
  // With C_j = Cov(omega_t, delta_jt) = c_j*sigma*s_j held fixed by
  // stationarity, the lag-1 autocovariance and the two contemporaneous
  // covariances yield r, then b_j, then the innovation variance.
  const double t1 = (c1 == 0.0) ? 0.0 : c1 * c1 / a1;
  const double t2 = (c2 == 0.0) ? 0.0 : c2 * c2 / a2;
  const double denom = 1.0 - c1 * c1 - c2 * c2;
  if (denom <= 0.0) {
    throw InfeasibleError(
        "solve_law_of_motion: correlation targets leave no room for own persistence");
  }
  const double r = (targets.autocorr - t1 - t2) / denom;
  if (!(std::abs(r) < 1.0)) {
    throw InfeasibleError("solve_law_of_motion: implied own persistence |rho_omega| = " +
                          std::to_string(std::abs(r)) + " >= 1");
  }

  const double b1 = (c1 == 0.0) ? 0.0 : c1 * sigma * (1.0 - a1 * r) / (a1 * s1);
  const double b2 = (c2 == 0.0) ? 0.0 : c2 * sigma * (1.0 - a2 * r) / (a2 * s2);

  auto var_term = [&](double cj, double aj) {
    if (cj == 0.0) return 0.0;
    const double w = 1.0 - aj * r;
    return cj * cj * (w * w / (aj * aj) + 2.0 * r * w / aj);
  };
  double sigma2_xi =
      targets.variance * (1.0 - r * r - var_term(c1, a1) - var_term(c2, a2));
  if (sigma2_xi < 0.0) {
    if (sigma2_xi > -1e-12 * targets.variance) {
      sigma2_xi = 0.0;
    } else {
      throw InfeasibleError(
          "solve_law_of_motion: targets imply a negative innovation variance");
    }
  }

  out.mu = (1.0 - r) * targets.mean - b1 * delta1.mean - b2 * delta2.mean;
  out.rho_omega = r;
  out.rho_delta1 = b1;
  out.rho_delta2 = b2;
  out.innovation_var = sigma2_xi;
  return out;
}

void DGPConfig::validate() const {
  structural.validate();
  shock_pK.validate();
  shock_pV.validate();
  shock_delta1.validate();
  shock_delta2.validate();
  targets.validate();
  require(eps_sd >= 0.0 && std::isfinite(eps_sd),
          "DGPConfig: eps_sd must be >= 0, got " + std::to_string(eps_sd));
  require(n_firms >= 1, "DGPConfig: n_firms must be >= 1");
  require(n_periods >= 1, "DGPConfig: n_periods must be >= 1");
  require(burn_in >= 0, "DGPConfig: burn_in must be >= 0");
}

SolvedProcesses solve_processes(const DGPConfig& config) {
  config.validate();
  SolvedProcesses s;
  s.pK = solve_ar1(config.shock_pK);
  s.pV = solve_ar1(config.shock_pV);
  s.delta1 = solve_ar1(config.shock_delta1);
  s.delta2 = solve_ar1(config.shock_delta2);
  s.lom = solve_law_of_motion(config.targets, config.shock_delta1, config.shock_delta2);
  return s;
}

namespace {

// Sign of d(profit)/dV at log input v, shifted to log scale:
//   F(v) = -softplus(delta2) + p + q_star + log f_v - pV - v.
// Profit is strictly concave in the level of the input whenever
// sigmoid(-delta2)*nu < 1 and rho < 1, so F crosses zero exactly once,
// from above.
struct FocEval {
  double value;
  double deriv;
};

FocEval eval_foc(const StructuralParams& sp, double k, double omega,
                 const DemandState& d, double pV, double v) {
  const double q_star = log_output(sp, k, v) + omega;
  const double p = inverse_demand(d, q_star);
  const double lfv = log_output_elasticity_v(sp, k, v);
  const double one_m = sigmoid(-d.delta2);  // 1 - 1/eta
  FocEval e;
  e.value = -softplus(d.delta2) + p + q_star + lfv - pV - v;
  const double a = sp.rho * k + std::log(sp.alpha);
  const double b = sp.rho * v + std::log1p(-sp.alpha);
  e.deriv = one_m * output_elasticity_v(sp, k, v) + sp.rho * sigmoid(a - b) - 1.0;
  return e;
}

}  // namespace

VariableInputSolution solve_variable_input(const StructuralParams& sp, double k,
                                           double omega, const DemandState& demand,
                                           double pV) {
  sp.validate();
  const double one_m = sigmoid(-demand.delta2);
  if (sp.rho > 0.0 && one_m * sp.nu >= 1.0) {
    throw SolverError(
        "solve_variable_input: no interior optimum (revenue returns to the variable "
        "input are not diminishing)");
  }

  double lo = -30.0, hi = 30.0;
  double flo = eval_foc(sp, k, omega, demand, pV, lo).value;
  double fhi = eval_foc(sp, k, omega, demand, pV, hi).value;
  // Widen until the sign change is inside.  F -> +inf at -inf and -inf at
  // +inf, so expansion in the indicated direction always terminates.
  double width = 60.0;
  for (int tries = 0; (flo <= 0.0 || fhi >= 0.0) && tries < 60; ++tries) {
    if (flo <= 0.0) {
      lo -= width;
      flo = eval_foc(sp, k, omega, demand, pV, lo).value;
    }
    if (fhi >= 0.0) {
      hi += width;
      fhi = eval_foc(sp, k, omega, demand, pV, hi).value;
    }
    width *= 2.0;
  }
  if (flo <= 0.0 || fhi >= 0.0) {
    throw SolverError("solve_variable_input: failed to bracket the first-order condition");
  }

  // Bisection narrows the bracket, then Newton finishes; any Newton step
  // that leaves the bracket falls back to bisection.
  double v = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const FocEval e = eval_foc(sp, k, omega, demand, pV, v);
    if (std::abs(e.value) <= 1e-12) break;
    if (e.value > 0.0) {
      lo = v;
    } else {
      hi = v;
    }
    double next = v - e.value / e.deriv;
    if (!(std::isfinite(next)) || next <= lo || next >= hi) {
      next = 0.5 * (lo + hi);
    }
    if (std::abs(next - v) <= 1e-14 * std::max(1.0, std::abs(v))) {
      v = next;
      break;
    }
    v = next;
  }

  VariableInputSolution sol;
  sol.v = v;
  sol.q_star = log_output(sp, k, v) + omega;
  sol.p = inverse_demand(demand, sol.q_star);
  return sol;
}

double solve_capital(const StructuralParams& sp, const PriorState& prior,
                     const SolvedProcesses& solved) {
  sp.validate();
  const double omega_hat = solved.lom.mu + solved.lom.rho_omega * prior.omega +
                           solved.lom.rho_delta1 * prior.delta1 +
                           solved.lom.rho_delta2 * prior.delta2;
  const double d1_hat = solved.delta1.intercept + solved.delta1.slope * prior.delta1;
  const double d2_hat = solved.delta2.intercept + solved.delta2.slope * prior.delta2;
  const double pV_hat = solved.pV.intercept + solved.pV.slope * prior.pV;

  const double eta_hat = 1.0 + std::exp(-d2_hat);
  const double one_m = sigmoid(-d2_hat);  // 1 - 1/eta
  const double denom = 1.0 - one_m * sp.nu;
  if (denom <= 0.0) {
    throw SolverError("solve_capital: no interior optimum (expected revenue returns "
                      "to scale are not diminishing)");
  }

  // Equating the two input FOCs fixes the log input ratio; along that ray
  // the technology is linear in v, f(v + gap, v) = nu*v + c_gap, so the
  // remaining FOC is linear in v and solves in closed form.
  const double gap =
      (prior.pK - pV_hat + std::log1p(-sp.alpha) - std::log(sp.alpha)) / (sp.rho - 1.0);
  const double a_minus_b = sp.rho * gap + std::log(sp.alpha) - std::log1p(-sp.alpha);
  const double c_gap =
      (sp.nu / sp.rho) *
      log_sum_exp2(sp.rho * gap + std::log(sp.alpha), std::log1p(-sp.alpha));
  const double lfv = std::log(sp.nu) - softplus(a_minus_b);

  const double v_plan = (-softplus(d2_hat) + d1_hat / eta_hat +
                         one_m * (c_gap + omega_hat) + lfv - pV_hat) /
                        denom;
  return v_plan + gap;
}

FirmPanel simulate_panel(const DGPConfig& config) {
  config.validate();
  const SolvedProcesses solved = solve_processes(config);

  const int N = config.n_firms;
  const int T = config.n_periods;
  FirmPanel panel;
  panel.n_firms = N;
  panel.n_periods = T;
  const std::size_t n = static_cast<std::size_t>(N) * T;
  for (auto* col : {&panel.q, &panel.p, &panel.k, &panel.v, &panel.pK, &panel.pV,
                    &panel.q_star, &panel.omega, &panel.delta1, &panel.delta2,
                    &panel.xi, &panel.eps}) {
    col->resize(n);
  }

  // Stationary joint initialization: the deltas are independent, and
  // omega given (delta1, delta2) is Gaussian with regression loadings
  // c_j*sigma/s_j and residual variance sigma^2*(1 - c1^2 - c2^2).
  const double s1 = std::sqrt(config.shock_delta1.variance);
  const double s2 = std::sqrt(config.shock_delta2.variance);
  const double sigma = std::sqrt(config.targets.variance);
  const double beta1 = (s1 > 0.0) ? config.targets.corr_delta1 * sigma / s1 : 0.0;
  const double beta2 = (s2 > 0.0) ? config.targets.corr_delta2 * sigma / s2 : 0.0;
  const double resvar = std::max(
      0.0, config.targets.variance * (1.0 - config.targets.corr_delta1 * config.targets.corr_delta1 -
                                      config.targets.corr_delta2 * config.targets.corr_delta2));
  const double res_sd = std::sqrt(resvar);
  const double xi_sd = std::sqrt(solved.lom.innovation_var);

  for (int i = 0; i < N; ++i) {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(i), kFirmDomain));

    double d1 = rng.normal(config.shock_delta1.mean, s1);
    double d2 = rng.normal(config.shock_delta2.mean, s2);
    double omega = config.targets.mean + beta1 * (d1 - config.shock_delta1.mean) +
                   beta2 * (d2 - config.shock_delta2.mean) + rng.normal(0.0, res_sd);
    double pK = rng.normal(config.shock_pK.mean, std::sqrt(config.shock_pK.variance));
    double pV = rng.normal(config.shock_pV.mean, std::sqrt(config.shock_pV.variance));

    auto advance = [&](double& xi_out) {
      // omega_t loads on the period t-1 deltas, so it moves first.
      const double xi = rng.normal(0.0, xi_sd);
      const double omega_next = solved.lom.mu + solved.lom.rho_omega * omega +
                                solved.lom.rho_delta1 * d1 +
                                solved.lom.rho_delta2 * d2 + xi;
      d1 = solved.delta1.intercept + solved.delta1.slope * d1 +
           rng.normal(0.0, solved.delta1.innovation_sd);
      d2 = solved.delta2.intercept + solved.delta2.slope * d2 +
           rng.normal(0.0, solved.delta2.innovation_sd);
      pV = solved.pV.intercept + solved.pV.slope * pV +
           rng.normal(0.0, solved.pV.innovation_sd);
      pK = solved.pK.intercept + solved.pK.slope * pK +
           rng.normal(0.0, solved.pK.innovation_sd);
      omega = omega_next;
      xi_out = xi;
    };

    double xi = 0.0;
    for (int b = 0; b < config.burn_in; ++b) advance(xi);

    for (int t = 0; t < T; ++t) {
      const PriorState prior{omega, d1, d2, pV, pK};
      const double k = solve_capital(config.structural, prior, solved);
      advance(xi);
      const DemandState demand{d1, d2};
      const VariableInputSolution sol =
          solve_variable_input(config.structural, k, omega, demand, pV);
      const double eps = rng.normal(0.0, config.eps_sd);

      const std::size_t j = panel.idx(i, t);
      panel.k[j] = k;
      panel.v[j] = sol.v;
      panel.q_star[j] = sol.q_star;
      panel.p[j] = sol.p;
      panel.q[j] = sol.q_star + eps;
      panel.pK[j] = pK;
      panel.pV[j] = pV;
      panel.omega[j] = omega;
      panel.delta1[j] = d1;
      panel.delta2[j] = d2;
      panel.xi[j] = xi;
      panel.eps[j] = eps;
    }
  }
  return panel;
}

}  // namespace gcfest
