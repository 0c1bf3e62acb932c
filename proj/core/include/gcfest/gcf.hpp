#ifndef GCFEST_GCF_HPP
#define GCFEST_GCF_HPP

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gcfest/features.hpp"
#include "gcfest/frame.hpp"
#include "gcfest/optim.hpp"
#include "gcfest/result.hpp"

namespace gcfest {

// Instrument layout for the control-function GMM estimator.  z is the
// full instrument vector, split into the special instruments z^s (the
// source of identifying variation, excluded from all nuisance
// projections) and the control variables z^c (everything else).
struct InstrumentPlan {
  std::vector<std::string> z_vars = {"k", "k_lag", "v_lag", "p_lag", "pV", "pV_lag"};
  std::vector<std::string> special_vars = {"pV"};
  int phi_degree = 4;      // total degree of the instrument basis phi(z)
  int control_degree = 4;  // total degree d of the z^c nuisance basis

  std::vector<std::string> control_vars() const;
  void validate() const;  // throws ConfigError
};

enum class WeightingMode {
  kOracle,   // covariance of moment contributions at a supplied theta0
  kTwoStep,  // identity-weighted first pass, then covariance at that estimate
  kIdentity,
};

struct EstimateOptions {
  WeightingMode weighting = WeightingMode::kOracle;
  std::optional<StructuralParams> theta0;  // required for kOracle
  BfgsOptions optimizer{};
  int n_starts = 5;
  std::uint64_t panel_seed = 0;  // echoed into the result, not used for draws
};

struct WeightingInfo {
  double condition = 0.0;
  bool ridged = false;
  bool identity_fallback = false;
};

// All per-panel precomputation the objective needs: the phi(z) basis,
// the z^c nuisance basis with its projector, the residualized and
// rank-selected instrument columns.  Construction is the expensive part;
// evaluating moments at a new theta touches only matrix-vector products.
class GcfProblem {
 public:
  GcfProblem(const EstimationFrame& frame, const InstrumentPlan& plan,
             bool keep_control_basis = false);

  Eigen::Index rows() const { return n_; }
  const InstrumentPlan& plan() const { return plan_; }
  // Indices into the phi(z) multi-index list that survived greedy rank
  // selection of the residualized columns.
  const std::vector<int>& selected() const { return selected_; }
  const std::vector<MultiIndex>& phi_labels() const { return phi_labels_; }

  Eigen::VectorXd residual(const StructuralParams& theta) const;
  // Least-squares fit of y on the z^c basis (the nuisance projection).
  Eigen::VectorXd project_control(const Eigen::VectorXd& y) const;
  // (1/n) * Phi_sel' * (res - proj(res)) for an arbitrary residual vector.
  Eigen::VectorXd moments_of_residual(const Eigen::VectorXd& res) const;
  Eigen::VectorXd orthogonalized_moments(const StructuralParams& theta) const;
  // The plain instrumented moment (1/n) * phi_sel' * (res - h) for a
  // caller-supplied, fixed control function value h.
  Eigen::VectorXd moments_fixed_control(const Eigen::VectorXd& res,
                                        const Eigen::VectorXd& h) const;
  double objective(const StructuralParams& theta, const Eigen::MatrixXd& w) const;
  Eigen::MatrixXd weighting_matrix(const StructuralParams& theta0,
                                   WeightingInfo* info = nullptr) const;

  const Eigen::MatrixXd& phi_residualized() const { return phi_sel_; }
  const Eigen::MatrixXd& phi_raw() const { return phi_raw_sel_; }
  // Selected columns of the z^c basis; only retained when the problem was
  // built with keep_control_basis = true.
  const Eigen::MatrixXd& control_basis() const;

  // Markup statistic at theta: sample mean over rows of
  // p + q - pV - v + log d f/d v.
  double avg_log_markup(const StructuralParams& theta) const;

 private:
  InstrumentPlan plan_;
  Eigen::Index n_ = 0;
  Eigen::VectorXd q_, p_, k_, v_, pV_;
  Eigen::MatrixXd phi_sel_;      // (phi - phi_tilde), selected columns
  Eigen::MatrixXd phi_raw_sel_;  // phi, same column subset
  std::vector<int> selected_;
  std::vector<MultiIndex> phi_labels_;
  std::optional<Projector> control_proj_;
  Eigen::MatrixXd control_basis_;  // kept on request
};

// Inverse of the centered sample covariance of per-observation moment
// contributions (rows of g).  Near-singular covariances get a ridge of
// 1e-10 * trace/dim; an exactly zero covariance falls back to the
// identity.  Diagnostics land in info when given.
Eigen::MatrixXd weighting_from_contributions(const Eigen::MatrixXd& g,
                                             WeightingInfo* info = nullptr);

// Free-function forms of the estimator surface.
Eigen::VectorXd residual(const StructuralParams& theta, const EstimationFrame& frame);
Eigen::VectorXd orthogonalized_moments(const StructuralParams& theta,
                                       const GcfProblem& problem);
double gmm_objective(const StructuralParams& theta, const GcfProblem& problem,
                     const Eigen::MatrixXd& w);
Eigen::MatrixXd weighting_matrix(const GcfProblem& problem,
                                 const StructuralParams& theta0,
                                 WeightingInfo* info = nullptr);

EstimationResult estimate(const FirmPanel& panel, const InstrumentPlan& plan,
                          const EstimateOptions& options);

// Shared parameter transform: optimizers work on x = (logit(alpha),
// log(-rho), log(nu)) so every iterate stays in the admissible region.
Eigen::Vector3d to_unconstrained(const StructuralParams& theta);
StructuralParams from_unconstrained(const Eigen::Vector3d& x);
// The deterministic multi-start points around the neutral parameter
// vector (alpha, rho, nu) = (0.5, -0.5, 1.0), in transformed space.
std::vector<Eigen::Vector3d> multistart_points(int n_starts);

// Directional derivative probe used by the orthogonality diagnostic.
// eta_coef and zeta_coef are coefficient vectors on the selected z^c
// basis columns; the realized perturbations are eta = B*eta_coef applied
// to each projected instrument column and zeta = B*zeta_coef applied to
// the projected residual.  Derivatives at 0 are estimated by central
// differences over step_grid; richardson_spread is the largest
// disagreement between consecutive steps.
struct DirectionalDerivatives {
  Eigen::VectorXd orthogonalized;  // moment form with both projections live
  Eigen::VectorXd raw_fixed_h;     // plain phi moments with h frozen
  double richardson_spread = 0.0;
};
DirectionalDerivatives directional_derivatives(const GcfProblem& problem,
                                               const StructuralParams& theta,
                                               const Eigen::VectorXd& eta_coef,
                                               const Eigen::VectorXd& zeta_coef,
                                               const std::vector<double>& step_grid);

struct OrthogonalityReport {
  int n_directions = 0;
  int n_moments = 0;
  double tol = 1e-3;
  // Per direction: max over moments of |derivative| / (per-moment
  // standard error of the moment at theta).
  std::vector<double> orthogonalized_stat;
  std::vector<double> raw_stat;
  int orthogonalized_pass = 0;  // directions with stat <= tol
  int raw_fail = 0;             // directions with stat > tol
  double max_richardson_spread = 0.0;
  bool contrast_holds = false;  // all orthogonalized pass, >= 90% raw fail
};

OrthogonalityReport check_neyman_orthogonality(
    const StructuralParams& theta, const EstimationFrame& frame,
    const InstrumentPlan& plan, int n_directions = 20,
    const std::vector<double>& step_grid = {1e-2, 1e-3, 1e-4},
    std::uint64_t seed = 0x0047C0DEULL, double tol = 1e-3);

}  // namespace gcfest

#endif
