#include "gcfest/gcf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "gcfest/errors.hpp"
#include "gcfest/rng.hpp"

namespace gcfest {

std::vector<std::string> InstrumentPlan::control_vars() const {
  std::vector<std::string> out;
  for (const auto& name : z_vars) {
    if (std::find(special_vars.begin(), special_vars.end(), name) ==
        special_vars.end()) {
      out.push_back(name);
    }
  }
  return out;
}

void InstrumentPlan::validate() const {
  if (z_vars.empty()) throw ConfigError("InstrumentPlan: z_vars is empty");
  if (special_vars.empty()) throw ConfigError("InstrumentPlan: special_vars is empty");
  std::set<std::string> zset(z_vars.begin(), z_vars.end());
  if (zset.size() != z_vars.size()) {
    throw ConfigError("InstrumentPlan: duplicate variable in z_vars");
  }
  for (const auto& s : special_vars) {
    if (!zset.count(s)) {
      throw ConfigError("InstrumentPlan: special variable '" + s +
                        "' is not part of z_vars");
    }
  }
  if (special_vars.size() >= z_vars.size()) {
    throw ConfigError("InstrumentPlan: no control variables left after removing "
                      "special variables");
  }
  if (phi_degree < 1) throw ConfigError("InstrumentPlan: phi_degree must be >= 1");
  if (control_degree < 1) {
    throw ConfigError("InstrumentPlan: control_degree must be >= 1");
  }
}

GcfProblem::GcfProblem(const EstimationFrame& frame, const InstrumentPlan& plan,
                       bool keep_control_basis)
    : plan_(plan) {
  plan_.validate();
  n_ = frame.rows();
  if (n_ < 2) throw std::invalid_argument("GcfProblem: frame has fewer than 2 rows");

  q_ = frame.q;
  p_ = frame.p;
  k_ = frame.k;
  v_ = frame.v;
  pV_ = frame.pV;

  const Eigen::MatrixXd zmat = frame_columns(frame, plan_.z_vars);
  const FeatureSpec phi_spec =
      make_feature_spec(plan_.z_vars, plan_.phi_degree, zmat);
  DesignMatrix phi = hermite_basis(phi_spec, zmat);
  phi_labels_ = phi.labels;

  const std::vector<std::string> cvars = plan_.control_vars();
  const Eigen::MatrixXd cmat = frame_columns(frame, cvars);
  const FeatureSpec cspec = make_feature_spec(cvars, plan_.control_degree, cmat);
  DesignMatrix cbasis = hermite_basis(cspec, cmat);

  const std::vector<int> bsel = greedy_rank_select(cbasis.values);
  if (bsel.empty()) {
    throw std::invalid_argument("GcfProblem: control basis has rank zero");
  }
  Eigen::MatrixXd bcols(n_, static_cast<Eigen::Index>(bsel.size()));
  for (std::size_t j = 0; j < bsel.size(); ++j) {
    bcols.col(static_cast<Eigen::Index>(j)) = cbasis.values.col(bsel[j]);
  }
  control_proj_.emplace(bcols);
  if (keep_control_basis) control_basis_ = bcols;

  // Residualize every instrument column against the z^c basis and keep a
  // full-rank subset.  Columns made of z^c variables alone are annihilated
  // by the projection and drop out here.
  Eigen::MatrixXd phi_perp = phi.values - control_proj_->fitted(phi.values);
  selected_ = greedy_rank_select(phi_perp);
  if (selected_.empty()) {
    throw std::invalid_argument(
        "GcfProblem: no instrument column survives residualization");
  }
  phi_sel_.resize(n_, static_cast<Eigen::Index>(selected_.size()));
  phi_raw_sel_.resize(n_, static_cast<Eigen::Index>(selected_.size()));
  for (std::size_t j = 0; j < selected_.size(); ++j) {
    phi_sel_.col(static_cast<Eigen::Index>(j)) = phi_perp.col(selected_[j]);
    phi_raw_sel_.col(static_cast<Eigen::Index>(j)) = phi.values.col(selected_[j]);
  }
}

const Eigen::MatrixXd& GcfProblem::control_basis() const {
  if (control_basis_.size() == 0) {
    throw std::logic_error(
        "GcfProblem: control basis not retained; construct with "
        "keep_control_basis = true");
  }
  return control_basis_;
}

Eigen::VectorXd GcfProblem::residual(const StructuralParams& theta) const {
  Eigen::VectorXd res(n_);
  for (Eigen::Index i = 0; i < n_; ++i) {
    res[i] = q_[i] - log_output(theta, k_[i], v_[i]);
  }
  return res;
}

Eigen::VectorXd GcfProblem::project_control(const Eigen::VectorXd& y) const {
  return control_proj_->fitted(y);
}

Eigen::VectorXd GcfProblem::moments_of_residual(const Eigen::VectorXd& res) const {
  const Eigen::VectorXd e = res - control_proj_->fitted(res);
  return (phi_sel_.transpose() * e) / static_cast<double>(n_);
}

Eigen::VectorXd GcfProblem::orthogonalized_moments(const StructuralParams& theta) const {
  return moments_of_residual(residual(theta));
}

Eigen::VectorXd GcfProblem::moments_fixed_control(const Eigen::VectorXd& res,
                                                  const Eigen::VectorXd& h) const {
  return (phi_raw_sel_.transpose() * (res - h)) / static_cast<double>(n_);
}

double GcfProblem::objective(const StructuralParams& theta,
                             const Eigen::MatrixXd& w) const {
  if (!theta.in_domain()) return std::numeric_limits<double>::infinity();
  const Eigen::VectorXd m = orthogonalized_moments(theta);
  if (!m.allFinite()) return std::numeric_limits<double>::infinity();
  return m.dot(w * m);
}

Eigen::MatrixXd weighting_from_contributions(const Eigen::MatrixXd& g,
                                             WeightingInfo* info) {
  const Eigen::Index n = g.rows();
  const Eigen::Index m = g.cols();
  if (n < 2) throw std::invalid_argument("weighting_from_contributions: need >= 2 rows");

  const Eigen::RowVectorXd mean = g.colwise().mean();
  const Eigen::MatrixXd centered = g.rowwise() - mean;
  Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(n - 1);
  cov = 0.5 * (cov + cov.transpose());

  WeightingInfo local;
  const double trace = cov.trace();
  if (!(trace > 0.0)) {
    // Zero moment noise (noiseless panels): no meaningful covariance to
    // invert, fall back to the identity.
    local.identity_fallback = true;
    local.condition = 1.0;
    if (info) *info = local;
    return Eigen::MatrixXd::Identity(m, m);
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  double lmin = es.eigenvalues().minCoeff();
  double lmax = es.eigenvalues().maxCoeff();
  if (!(lmin > 0.0) || lmax / lmin > 1e14) {
    const double ridge = 1e-10 * trace / static_cast<double>(m);
    cov.diagonal().array() += ridge;
    es.compute(cov);
    lmin = es.eigenvalues().minCoeff();
    lmax = es.eigenvalues().maxCoeff();
    local.ridged = true;
  }
  local.condition = lmax / lmin;
  if (info) *info = local;
  return es.eigenvectors() *
         es.eigenvalues().cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
}

Eigen::MatrixXd GcfProblem::weighting_matrix(const StructuralParams& theta0,
                                             WeightingInfo* info) const {
  const Eigen::VectorXd res = residual(theta0);
  const Eigen::VectorXd e = res - control_proj_->fitted(res);
  const Eigen::MatrixXd g = phi_sel_.array().colwise() * e.array();
  return weighting_from_contributions(g, info);
}

double GcfProblem::avg_log_markup(const StructuralParams& theta) const {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n_; ++i) {
    acc += p_[i] + q_[i] - pV_[i] - v_[i] +
           log_output_elasticity_v(theta, k_[i], v_[i]);
  }
  return acc / static_cast<double>(n_);
}

Eigen::VectorXd residual(const StructuralParams& theta, const EstimationFrame& frame) {
  Eigen::VectorXd res(frame.rows());
  for (Eigen::Index i = 0; i < frame.rows(); ++i) {
    res[i] = frame.q[i] - log_output(theta, frame.k[i], frame.v[i]);
  }
  return res;
}

Eigen::VectorXd orthogonalized_moments(const StructuralParams& theta,
                                       const GcfProblem& problem) {
  return problem.orthogonalized_moments(theta);
}

double gmm_objective(const StructuralParams& theta, const GcfProblem& problem,
                     const Eigen::MatrixXd& w) {
  return problem.objective(theta, w);
}

Eigen::MatrixXd weighting_matrix(const GcfProblem& problem,
                                 const StructuralParams& theta0,
                                 WeightingInfo* info) {
  return problem.weighting_matrix(theta0, info);
}

Eigen::Vector3d to_unconstrained(const StructuralParams& theta) {
  theta.validate();
  if (theta.rho >= 0.0) {
    throw std::invalid_argument(
        "to_unconstrained: transform covers rho < 0 only, got rho = " +
        std::to_string(theta.rho));
  }
  return {std::log(theta.alpha / (1.0 - theta.alpha)), std::log(-theta.rho),
          std::log(theta.nu)};
}

StructuralParams from_unconstrained(const Eigen::Vector3d& x) {
  StructuralParams theta;
  theta.alpha = sigmoid(x[0]);
  theta.rho = -std::exp(x[1]);
  theta.nu = std::exp(x[2]);
  return theta;
}

std::vector<Eigen::Vector3d> multistart_points(int n_starts) {
  if (n_starts < 1) throw std::invalid_argument("multistart_points: n_starts >= 1");
  const Eigen::Vector3d base = to_unconstrained(StructuralParams{0.5, -0.5, 1.0});
  const double jitters[5][3] = {{0.0, 0.0, 0.0},
                                {0.4, 0.3, 0.1},
                                {-0.4, -0.3, -0.1},
                                {0.8, -0.2, 0.05},
                                {-0.6, 0.25, -0.05}};
  std::vector<Eigen::Vector3d> out;
  out.reserve(n_starts);
  for (int i = 0; i < std::min(n_starts, 5); ++i) {
    out.push_back(base + Eigen::Vector3d(jitters[i][0], jitters[i][1], jitters[i][2]));
  }
  // Extra starts beyond the standard five come from a fixed-seed stream.
  Rng rng(0x57A27ULL);
  for (int i = 5; i < n_starts; ++i) {
    out.push_back(base + 0.5 * Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()));
  }
  return out;
}

namespace {

struct MultistartOutcome {
  BfgsResult best;
  StructuralParams theta;
};

MultistartOutcome run_multistart(const std::function<double(const Eigen::VectorXd&)>& f,
                                 int n_starts, const BfgsOptions& opts) {
  MultistartOutcome out;
  bool have = false;
  for (const Eigen::Vector3d& x0 : multistart_points(n_starts)) {
    BfgsResult r = minimize_bfgs(f, x0, opts);
    if (!have || r.value < out.best.value) {
      out.best = r;
      have = true;
    }
  }
  out.theta = from_unconstrained(Eigen::Vector3d(out.best.x));
  return out;
}

}  // namespace

EstimationResult estimate(const FirmPanel& panel, const InstrumentPlan& plan,
                          const EstimateOptions& options) {
  const EstimationFrame frame = build_lagged_frame(panel);
  const GcfProblem problem(frame, plan);

  EstimationResult result;
  result.method = "gcf";
  result.degree = plan.control_degree;
  result.n_rows = static_cast<long>(problem.rows());
  result.selected_moment_count = static_cast<int>(problem.selected().size());
  result.panel_seed = options.panel_seed;

  WeightingInfo winfo;
  Eigen::MatrixXd w;
  switch (options.weighting) {
    case WeightingMode::kOracle: {
      if (!options.theta0) {
        throw ConfigError("estimate: oracle weighting requires theta0");
      }
      w = problem.weighting_matrix(*options.theta0, &winfo);
      break;
    }
    case WeightingMode::kIdentity: {
      w = Eigen::MatrixXd::Identity(problem.selected().size(),
                                    problem.selected().size());
      winfo.condition = 1.0;
      break;
    }
    case WeightingMode::kTwoStep: {
      const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(
          problem.selected().size(), problem.selected().size());
      auto f1 = [&](const Eigen::VectorXd& x) {
        return problem.objective(from_unconstrained(Eigen::Vector3d(x)), eye);
      };
      const MultistartOutcome pass1 =
          run_multistart(f1, options.n_starts, options.optimizer);
      w = problem.weighting_matrix(pass1.theta, &winfo);
      break;
    }
  }

  auto f = [&](const Eigen::VectorXd& x) {
    return problem.objective(from_unconstrained(Eigen::Vector3d(x)), w);
  };
  const MultistartOutcome outcome =
      run_multistart(f, options.n_starts, options.optimizer);

  result.theta_hat = outcome.theta;
  result.objective_value = outcome.best.value;
  result.iterations = outcome.best.iterations;
  result.evaluations = outcome.best.evaluations;
  result.converged = outcome.best.converged;
  result.gradient_norm = outcome.best.gradient_norm;
  result.avg_log_markup = problem.avg_log_markup(result.theta_hat);
  result.weighting_condition = winfo.condition;
  result.weighting_ridged = winfo.ridged;
  result.weighting_identity_fallback = winfo.identity_fallback;
  if (winfo.ridged) {
    result.warnings.push_back("weighting covariance near singular; ridge applied");
  }
  if (winfo.identity_fallback) {
    result.warnings.push_back("weighting covariance is zero; identity weighting used");
  }
  if (!result.converged) {
    result.warnings.push_back("optimizer stopped before meeting the gradient tolerance");
  }
  return result;
}

DirectionalDerivatives directional_derivatives(const GcfProblem& problem,
                                               const StructuralParams& theta,
                                               const Eigen::VectorXd& eta_coef,
                                               const Eigen::VectorXd& zeta_coef,
                                               const std::vector<double>& step_grid) {
  const Eigen::MatrixXd& b = problem.control_basis();
  if (eta_coef.size() != b.cols() || zeta_coef.size() != b.cols()) {
    throw std::invalid_argument(
        "directional_derivatives: coefficient length must match the control basis "
        "column count");
  }
  if (step_grid.empty()) {
    throw std::invalid_argument("directional_derivatives: step_grid is empty");
  }
  const Eigen::Index n = problem.rows();
  const double dn = static_cast<double>(n);

  const Eigen::VectorXd eta = b * eta_coef;
  const Eigen::VectorXd zeta = b * zeta_coef;
  const Eigen::VectorXd res = problem.residual(theta);
  const Eigen::VectorXd h = problem.project_control(res);
  const Eigen::VectorXd e = res - h;

  // Orthogonalized form perturbs both nuisances:
  //   m_k(l) = (1/n) (Phi_k - l*eta)' (e - l*zeta).
  // Fixed-h form perturbs only the control function inside the plain
  // instrumented moment:
  //   m4_k(l) = (1/n) phi_k' (res - h - l*zeta).
  auto orth_at = [&](double l) -> Eigen::VectorXd {
    const Eigen::VectorXd pert_res = e - l * zeta;
    Eigen::VectorXd m = problem.phi_residualized().transpose() * pert_res;
    m.array() -= l * eta.dot(pert_res);
    return m / dn;
  };
  auto raw_at = [&](double l) -> Eigen::VectorXd {
    return problem.phi_raw().transpose() * (res - h - l * zeta) / dn;
  };

  DirectionalDerivatives out;
  double spread = 0.0;
  Eigen::VectorXd prev_orth, prev_raw;
  for (std::size_t s = 0; s < step_grid.size(); ++s) {
    const double l = step_grid[s];
    const Eigen::VectorXd d_orth = (orth_at(l) - orth_at(-l)) / (2.0 * l);
    const Eigen::VectorXd d_raw = (raw_at(l) - raw_at(-l)) / (2.0 * l);
    if (s == 0) {
      out.orthogonalized = d_orth;
      out.raw_fixed_h = d_raw;
    } else {
      spread = std::max(spread, (d_orth - prev_orth).cwiseAbs().maxCoeff());
      spread = std::max(spread, (d_raw - prev_raw).cwiseAbs().maxCoeff());
    }
    prev_orth = d_orth;
    prev_raw = d_raw;
  }
  out.richardson_spread = spread;
  return out;
}

OrthogonalityReport check_neyman_orthogonality(const StructuralParams& theta,
                                               const EstimationFrame& frame,
                                               const InstrumentPlan& plan,
                                               int n_directions,
                                               const std::vector<double>& step_grid,
                                               std::uint64_t seed, double tol) {
  if (n_directions < 1) {
    throw std::invalid_argument("check_neyman_orthogonality: n_directions >= 1");
  }
  const GcfProblem problem(frame, plan, /*keep_control_basis=*/true);
  const Eigen::Index n = problem.rows();
  const Eigen::Index nb = problem.control_basis().cols();
  const Eigen::Index nm = problem.phi_residualized().cols();

  // Per-moment noise scale at theta: sd of the per-observation moment
  // contribution over sqrt(n).  Derivatives are judged relative to it.
  const Eigen::VectorXd res = problem.residual(theta);
  const Eigen::VectorXd e = res - problem.project_control(res);
  Eigen::VectorXd se(nm);
  for (Eigen::Index j = 0; j < nm; ++j) {
    const Eigen::ArrayXd g = problem.phi_residualized().col(j).array() * e.array();
    const double mean = g.mean();
    const double var = (g - mean).square().sum() / static_cast<double>(n - 1);
    se[j] = std::sqrt(var / static_cast<double>(n));
    if (!(se[j] > 0.0)) se[j] = 1.0;  // degenerate (noiseless) fallback
  }

  OrthogonalityReport report;
  report.n_directions = n_directions;
  report.n_moments = static_cast<int>(nm);
  report.tol = tol;

  Rng rng(seed);
  for (int d = 0; d < n_directions; ++d) {
    Eigen::VectorXd a(nb), c(nb);
    for (Eigen::Index j = 0; j < nb; ++j) a[j] = rng.normal();
    for (Eigen::Index j = 0; j < nb; ++j) c[j] = rng.normal();
    // Unit root-mean-square perturbations keep the relative scale meaningful.
    const Eigen::VectorXd eta = problem.control_basis() * a;
    const Eigen::VectorXd zeta = problem.control_basis() * c;
    const double eta_rms = std::sqrt(eta.squaredNorm() / static_cast<double>(n));
    const double zeta_rms = std::sqrt(zeta.squaredNorm() / static_cast<double>(n));
    if (eta_rms > 0.0) a /= eta_rms;
    if (zeta_rms > 0.0) c /= zeta_rms;

    const DirectionalDerivatives dd =
        directional_derivatives(problem, theta, a, c, step_grid);
    const double orth_stat = (dd.orthogonalized.cwiseAbs().array() / se.array()).maxCoeff();
    const double raw_stat = (dd.raw_fixed_h.cwiseAbs().array() / se.array()).maxCoeff();
    report.orthogonalized_stat.push_back(orth_stat);
    report.raw_stat.push_back(raw_stat);
    if (orth_stat <= tol) ++report.orthogonalized_pass;
    if (raw_stat > tol) ++report.raw_fail;
    report.max_richardson_spread =
        std::max(report.max_richardson_spread, dd.richardson_spread);
  }

  report.contrast_holds =
      report.orthogonalized_pass == n_directions &&
      report.raw_fail * 10 >= n_directions * 9;
  return report;
}

}  // namespace gcfest
