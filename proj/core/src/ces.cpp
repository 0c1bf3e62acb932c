#include "gcfest/ces.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gcfest {

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double log_sum_exp2(double a, double b) {
  const double m = std::max(a, b);
  if (!std::isfinite(m)) return m;  // both -inf, or an inf dominates
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

bool StructuralParams::in_domain() const noexcept {
  return alpha > 0.0 && alpha < 1.0 && rho < 1.0 && rho != 0.0 && nu > 0.0 &&
         std::isfinite(alpha) && std::isfinite(rho) && std::isfinite(nu);
}

void StructuralParams::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("StructuralParams: alpha must lie in (0,1), got " +
                                std::to_string(alpha));
  }
  if (!(rho < 1.0) || rho == 0.0 || !std::isfinite(rho)) {
    throw std::invalid_argument(
        "StructuralParams: rho must be finite, < 1 and nonzero, got " +
        std::to_string(rho));
  }
  if (!(nu > 0.0) || !std::isfinite(nu)) {
    throw std::invalid_argument("StructuralParams: nu must be positive, got " +
                                std::to_string(nu));
  }
}

double DemandState::elasticity() const noexcept { return 1.0 + std::exp(-delta2); }

double log_output(const StructuralParams& sp, double k, double v) {
  const double a = sp.rho * k + std::log(sp.alpha);
  const double b = sp.rho * v + std::log1p(-sp.alpha);
  return (sp.nu / sp.rho) * log_sum_exp2(a, b);
}

double output_elasticity_v(const StructuralParams& sp, double k, double v) {
  const double a = sp.rho * k + std::log(sp.alpha);
  const double b = sp.rho * v + std::log1p(-sp.alpha);
  return sp.nu * sigmoid(b - a);
}

double log_output_elasticity_v(const StructuralParams& sp, double k, double v) {
  const double a = sp.rho * k + std::log(sp.alpha);
  const double b = sp.rho * v + std::log1p(-sp.alpha);
  return std::log(sp.nu) - softplus(a - b);
}

double output_elasticity_k(const StructuralParams& sp, double k, double v) {
  return sp.nu - output_elasticity_v(sp, k, v);
}

double markup(double delta2) { return 1.0 + std::exp(delta2); }

double log_markup(double delta2) { return softplus(delta2); }

double inverse_demand(const DemandState& d, double q_star) {
  return (d.delta1 - q_star) / d.elasticity();
}

double log_markup_plus_noise(double p, double q, double pV, double v,
                             double elasticity_v) {
  if (!(elasticity_v > 0.0)) {
    throw std::invalid_argument(
        "log_markup_plus_noise: elasticity_v must be positive, got " +
        std::to_string(elasticity_v));
  }
  return p + q - pV - v + std::log(elasticity_v);
}

}  // namespace gcfest
