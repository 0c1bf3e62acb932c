#ifndef GCFEST_CES_HPP
#define GCFEST_CES_HPP

namespace gcfest {

// CES production technology in logs:
//   f(k, v) = (nu/rho) * log(alpha * e^(rho k) + (1-alpha) * e^(rho v))
// with capital k and a flexible input v, both in logs.  rho < 1 and
// rho != 0 (the rho -> 0 limit is out of scope), 0 < alpha < 1, nu > 0.
struct StructuralParams {
  double alpha = 0.0;
  double rho = 0.0;
  double nu = 0.0;

  bool in_domain() const noexcept;
  // Throws std::invalid_argument when outside the admissible region.
  void validate() const;
};

// Log-linear inverse demand: a firm producing planned log output q_star
// facing state (delta1, delta2) sells at log price
//   p = (delta1 - q_star) / eta,   eta = 1 + exp(-delta2) > 1.
struct DemandState {
  double delta1 = 0.0;
  double delta2 = 0.0;

  double elasticity() const noexcept;  // eta
};

// f(k, v); evaluated via log-sum-exp so large |rho * input| cannot
// overflow.
double log_output(const StructuralParams& sp, double k, double v);

// d f / d v = nu * sigmoid(b - a) with a = rho*k + log(alpha),
// b = rho*v + log(1-alpha).  Lies in (0, nu).
double output_elasticity_v(const StructuralParams& sp, double k, double v);

// log of the above, computed as log(nu) - softplus(a - b); stable when
// the elasticity underflows.
double log_output_elasticity_v(const StructuralParams& sp, double k, double v);

// d f / d k = nu - output_elasticity_v.
double output_elasticity_k(const StructuralParams& sp, double k, double v);

// mu = 1 + exp(delta2); the multiplicative wedge between price and
// marginal cost implied by the demand curvature.
double markup(double delta2);
double log_markup(double delta2);  // softplus(delta2)

double inverse_demand(const DemandState& d, double q_star);

// Recovers log(markup) + noise from observables and the input elasticity:
//   p + q - pV - v + log(elasticity_v).
// q is realized log output (planned plus noise), pV the log input price.
// Throws std::invalid_argument when elasticity_v <= 0.
double log_markup_plus_noise(double p, double q, double pV, double v,
                             double elasticity_v);

// Numerically stable helpers shared across the toolkit.
double sigmoid(double x);             // 1 / (1 + e^-x)
double softplus(double x);            // log(1 + e^x)
double log_sum_exp2(double a, double b);

}  // namespace gcfest

#endif
