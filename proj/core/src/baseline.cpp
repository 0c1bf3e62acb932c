#include "gcfest/baseline.hpp"

#include <cmath>
#include <limits>

#include "gcfest/errors.hpp"
#include "gcfest/features.hpp"
#include "gcfest/optim.hpp"

namespace gcfest {

void BaselineConfig::validate() const {
  if (first_stage_degree < 1) {
    throw ConfigError("BaselineConfig: first_stage_degree must be >= 1");
  }
  if (g_degree < 1) throw ConfigError("BaselineConfig: g_degree must be >= 1");
  plan.validate();
}

Eigen::VectorXd first_stage(const EstimationFrame& frame,
                            const std::vector<std::string>& x_vars, int degree) {
  const Eigen::MatrixXd xmat = frame_columns(frame, x_vars);
  const FeatureSpec spec = make_feature_spec(x_vars, degree, xmat);
  DesignMatrix basis = hermite_basis(spec, xmat);
  basis.selected = greedy_rank_select(basis.values);
  return project(basis, frame.q_lag);
}

namespace {

class BaselineProblem {
 public:
  BaselineProblem(const EstimationFrame& frame, const BaselineConfig& config)
      : g_degree_(config.g_degree) {
    n_ = frame.rows();
    q_ = frame.q;
    p_ = frame.p;
    k_ = frame.k;
    v_ = frame.v;
    pV_ = frame.pV;
    k_lag_ = frame.k_lag;
    v_lag_ = frame.v_lag;

    const Eigen::MatrixXd zmat = frame_columns(frame, config.plan.z_vars);
    const FeatureSpec phi_spec =
        make_feature_spec(config.plan.z_vars, config.plan.phi_degree, zmat);
    DesignMatrix phi = hermite_basis(phi_spec, zmat);
    selected_ = greedy_rank_select(phi.values);
    phi_sel_.resize(n_, static_cast<Eigen::Index>(selected_.size()));
    for (std::size_t j = 0; j < selected_.size(); ++j) {
      phi_sel_.col(static_cast<Eigen::Index>(j)) = phi.values.col(selected_[j]);
    }

    qhat_lag_ = first_stage(frame, config.plan.z_vars, config.first_stage_degree);
  }

  Eigen::Index rows() const { return n_; }
  int moment_count() const { return static_cast<int>(selected_.size()); }

  // Residual before the law-of-motion control, q_t - f(k_t, v_t; theta),
  // and the Hermite columns of the recovered lagged productivity.  The
  // standardization of omega_hat is recomputed at every theta so the
  // polynomial stays conditioned as theta moves.
  struct Parts {
    Eigen::VectorXd u0;
    Eigen::MatrixXd h;
  };

  Parts parts(const StructuralParams& theta) const {
    Parts out;
    out.u0.resize(n_);
    Eigen::VectorXd omega_hat(n_);
    for (Eigen::Index i = 0; i < n_; ++i) {
      out.u0[i] = q_[i] - log_output(theta, k_[i], v_[i]);
      omega_hat[i] = qhat_lag_[i] - log_output(theta, k_lag_[i], v_lag_[i]);
    }
    const double mean = omega_hat.mean();
    double sd = std::sqrt((omega_hat.array() - mean).square().sum() /
                          static_cast<double>(n_ - 1));
    if (!(sd > 1e-12)) sd = 1.0;  // degenerate recovered productivity

    out.h.resize(n_, g_degree_ + 1);
    const Eigen::ArrayXd x = (omega_hat.array() - mean) / sd;
    out.h.col(0).setOnes();
    if (g_degree_ >= 1) out.h.col(1) = x.matrix();
    for (int d = 1; d < g_degree_; ++d) {
      out.h.col(d + 1) =
          (x * out.h.col(d).array() - static_cast<double>(d) * out.h.col(d - 1).array())
              .matrix();
    }
    return out;
  }

  // Concentrates the law-of-motion coefficients out of the GMM problem at
  // fixed theta: gamma solves min over gamma of the weighted moment norm.
  struct Concentrated {
    Eigen::VectorXd moments;
    Eigen::VectorXd gamma;
  };

  Concentrated concentrate(const StructuralParams& theta,
                           const Eigen::MatrixXd& w) const {
    const Parts pt = parts(theta);
    const double dn = static_cast<double>(n_);
    const Eigen::VectorXd m0 = phi_sel_.transpose() * pt.u0 / dn;
    const Eigen::MatrixXd g = phi_sel_.transpose() * pt.h / dn;
    const Eigen::MatrixXd gw = g.transpose() * w;
    Concentrated out;
    out.gamma = Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(gw * g).solve(gw * m0);
    out.moments = m0 - g * out.gamma;
    return out;
  }

  double objective(const StructuralParams& theta, const Eigen::MatrixXd& w) const {
    if (!theta.in_domain()) return std::numeric_limits<double>::infinity();
    const Concentrated c = concentrate(theta, w);
    if (!c.moments.allFinite()) return std::numeric_limits<double>::infinity();
    return c.moments.dot(w * c.moments);
  }

  Eigen::MatrixXd weighting_matrix(const StructuralParams& theta0,
                                   WeightingInfo* info) const {
    const Eigen::MatrixXd eye =
        Eigen::MatrixXd::Identity(moment_count(), moment_count());
    const Parts pt = parts(theta0);
    const Concentrated c = concentrate(theta0, eye);
    const Eigen::VectorXd u = pt.u0 - pt.h * c.gamma;
    const Eigen::MatrixXd contrib = phi_sel_.array().colwise() * u.array();
    return weighting_from_contributions(contrib, info);
  }

  double avg_log_markup(const StructuralParams& theta) const {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n_; ++i) {
      acc += p_[i] + q_[i] - pV_[i] - v_[i] +
             log_output_elasticity_v(theta, k_[i], v_[i]);
    }
    return acc / static_cast<double>(n_);
  }

 private:
  int g_degree_;
  Eigen::Index n_ = 0;
  Eigen::VectorXd q_, p_, k_, v_, pV_, k_lag_, v_lag_, qhat_lag_;
  Eigen::MatrixXd phi_sel_;
  std::vector<int> selected_;
};

}  // namespace

EstimationResult estimate_baseline(const FirmPanel& panel, const BaselineConfig& config,
                                   const EstimateOptions& options) {
  config.validate();
  const EstimationFrame frame = build_lagged_frame(panel);
  const BaselineProblem problem(frame, config);

  EstimationResult result;
  result.method = "baseline";
  result.degree = config.g_degree;
  result.n_rows = static_cast<long>(problem.rows());
  result.selected_moment_count = problem.moment_count();
  result.panel_seed = options.panel_seed;

  WeightingInfo winfo;
  Eigen::MatrixXd w;
  const Eigen::MatrixXd eye =
      Eigen::MatrixXd::Identity(problem.moment_count(), problem.moment_count());

  auto best_of_starts = [&](const Eigen::MatrixXd& wm) {
    BfgsResult best;
    bool have = false;
    for (const Eigen::Vector3d& x0 : multistart_points(options.n_starts)) {
      auto f = [&](const Eigen::VectorXd& x) {
        return problem.objective(from_unconstrained(Eigen::Vector3d(x)), wm);
      };
      BfgsResult r = minimize_bfgs(f, x0, options.optimizer);
      if (!have || r.value < best.value) {
        best = r;
        have = true;
      }
    }
    return best;
  };

  switch (options.weighting) {
    case WeightingMode::kOracle: {
      if (!options.theta0) {
        throw ConfigError("estimate_baseline: oracle weighting requires theta0");
      }
      w = problem.weighting_matrix(*options.theta0, &winfo);
      break;
    }
    case WeightingMode::kIdentity: {
      w = eye;
      winfo.condition = 1.0;
      break;
    }
    case WeightingMode::kTwoStep: {
      const BfgsResult pass1 = best_of_starts(eye);
      w = problem.weighting_matrix(from_unconstrained(Eigen::Vector3d(pass1.x)),
                                   &winfo);
      break;
    }
  }

  const BfgsResult best = best_of_starts(w);
  result.theta_hat = from_unconstrained(Eigen::Vector3d(best.x));
  result.objective_value = best.value;
  result.iterations = best.iterations;
  result.evaluations = best.evaluations;
  result.converged = best.converged;
  result.gradient_norm = best.gradient_norm;
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

}  // namespace gcfest
