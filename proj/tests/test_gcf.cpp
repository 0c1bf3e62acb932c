#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "gcfest/ces.hpp"
#include "gcfest/dgp.hpp"
#include "gcfest/errors.hpp"
#include "gcfest/frame.hpp"
#include "gcfest/gcf.hpp"
#include "gcfest/rng.hpp"

using namespace gcfest;

namespace {

FirmPanel small_panel(int n_firms = 300, int n_periods = 10, std::uint64_t seed = 101) {
  DGPConfig config;
  config.n_firms = n_firms;
  config.n_periods = n_periods;
  config.seed = seed;
  return simulate_panel(config);
}

const StructuralParams kTruth{0.3, -1.0, 0.95};

}  // namespace

TEST_CASE("lagged frame has one row per firm and later period") {
  const FirmPanel panel = small_panel(17, 6, 5);
  const EstimationFrame frame = build_lagged_frame(panel);
  CHECK(frame.rows() == 17 * 5);
  // Row r of firm i, transition t-1 -> t: current vs lagged columns line up.
  int r = 0;
  for (int i = 0; i < panel.n_firms; ++i) {
    for (int t = 1; t < panel.n_periods; ++t, ++r) {
      CHECK(frame.q[r] == panel.q[panel.idx(i, t)]);
      CHECK(frame.q_lag[r] == panel.q[panel.idx(i, t - 1)]);
      CHECK(frame.k[r] == panel.k[panel.idx(i, t)]);
      CHECK(frame.k_lag[r] == panel.k[panel.idx(i, t - 1)]);
      CHECK(frame.v_lag[r] == panel.v[panel.idx(i, t - 1)]);
      CHECK(frame.p_lag[r] == panel.p[panel.idx(i, t - 1)]);
      CHECK(frame.pV[r] == panel.pV[panel.idx(i, t)]);
      CHECK(frame.pV_lag[r] == panel.pV[panel.idx(i, t - 1)]);
      CHECK(frame.omega[r] == panel.omega[panel.idx(i, t)]);
      CHECK(frame.eps[r] == panel.eps[panel.idx(i, t)]);
    }
  }

  FirmPanel too_short;
  too_short.n_firms = 3;
  too_short.n_periods = 1;
  too_short.q.resize(3);
  CHECK_THROWS_AS((void)build_lagged_frame(too_short), ConfigError);
}

TEST_CASE("frame columns resolve by name") {
  const FirmPanel panel = small_panel(11, 4, 6);
  const EstimationFrame frame = build_lagged_frame(panel);
  const Eigen::MatrixXd m = frame_columns(frame, {"k", "pV_lag", "q"});
  CHECK(m.rows() == frame.rows());
  CHECK(m.cols() == 3);
  CHECK(m(4, 0) == frame.k[4]);
  CHECK(m(4, 1) == frame.pV_lag[4]);
  CHECK(m(4, 2) == frame.q[4]);
  CHECK_THROWS_AS((void)frame_column(frame, "nope"), ConfigError);
}

TEST_CASE("residual at the truth is productivity plus noise") {
  const FirmPanel panel = small_panel(100, 8, 7);
  const EstimationFrame frame = build_lagged_frame(panel);
  const Eigen::VectorXd res = residual(kTruth, frame);
  REQUIRE(res.size() == frame.rows());
  for (Eigen::Index r = 0; r < res.size(); ++r) {
    CHECK(res[r] == doctest::Approx(frame.omega[r] + frame.eps[r]).epsilon(1e-10));
  }
  // At a wrong theta the residual moves by the output-function difference.
  StructuralParams shifted = kTruth;
  shifted.nu += 0.1;
  const Eigen::VectorXd res2 = residual(shifted, frame);
  for (Eigen::Index r = 0; r < res.size(); ++r) {
    const double diff = log_output(kTruth, frame.k[r], frame.v[r]) -
                        log_output(shifted, frame.k[r], frame.v[r]);
    CHECK(res2[r] - res[r] == doctest::Approx(diff).epsilon(1e-10));
  }
}

TEST_CASE("noiseless residual vanishes identically at the truth") {
  DGPConfig config;
  config.n_firms = 60;
  config.n_periods = 6;
  config.seed = 8;
  config.eps_sd = 0.0;
  config.targets = MomentTargets{0.0, 0.0, 0.0, 0.0, 0.0};  // omega frozen at 0
  const FirmPanel panel = simulate_panel(config);
  const EstimationFrame frame = build_lagged_frame(panel);
  const Eigen::VectorXd res = residual(kTruth, frame);
  CHECK(res.lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("projection-annihilated residuals produce zero moments") {
  const FirmPanel panel = small_panel(200, 8, 9);
  const EstimationFrame frame = build_lagged_frame(panel);
  InstrumentPlan plan;
  plan.control_degree = 2;
  const GcfProblem problem(frame, plan, /*keep_control_basis=*/true);

  // Any residual inside the control span is annihilated.
  const Eigen::MatrixXd& b = problem.control_basis();
  Eigen::VectorXd in_span = b.col(0) * 0.7 + b.col(3) * -1.2 + b.col(b.cols() - 1) * 0.4;
  const Eigen::VectorXd m = problem.moments_of_residual(in_span);
  CHECK(m.lpNorm<Eigen::Infinity>() <= 1e-9);
}

TEST_CASE("moments at the truth are statistically small") {
  const FirmPanel panel = small_panel(400, 12, 10);
  const EstimationFrame frame = build_lagged_frame(panel);
  InstrumentPlan plan;
  plan.control_degree = 2;
  const GcfProblem problem(frame, plan);
  const Eigen::VectorXd m = problem.orthogonalized_moments(kTruth);
  // Per-moment t statistics from the contribution spread.
  const Eigen::VectorXd res = problem.residual(kTruth);
  const Eigen::VectorXd centered = res - problem.project_control(res);
  const double n = static_cast<double>(frame.rows());
  const Eigen::MatrixXd& phi = problem.phi_residualized();
  for (Eigen::Index j = 0; j < m.size(); ++j) {
    const Eigen::ArrayXd contrib = phi.col(j).array() * centered.array();
    const double sd = std::sqrt((contrib - contrib.mean()).square().sum() / (n - 1.0));
    const double t = m[j] / (sd / std::sqrt(n));
    CHECK(std::abs(t) <= 5.0);
  }
}

TEST_CASE("orthogonalized moments equal fixed-control moments at the projected residual") {
  const FirmPanel panel = small_panel(150, 8, 11);
  const EstimationFrame frame = build_lagged_frame(panel);
  InstrumentPlan plan;
  plan.control_degree = 3;
  const GcfProblem problem(frame, plan);

  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const StructuralParams theta{0.05 + 0.9 * rng.uniform(), -2.5 + 2.4 * rng.uniform(),
                                 0.3 + 1.2 * rng.uniform()};
    if (!theta.in_domain()) continue;
    const Eigen::VectorXd res = problem.residual(theta);
    const Eigen::VectorXd h = problem.project_control(res);
    const Eigen::VectorXd lhs = problem.orthogonalized_moments(theta);
    const Eigen::VectorXd rhs = problem.moments_fixed_control(res, h);
    CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() <= 1e-10);
  }
}

TEST_CASE("weighting matrix inverts an isotropic covariance") {
  // Independent contributions with variance sigma^2 per moment: the
  // weighting matrix approaches I/sigma^2.
  Rng rng(13);
  const int n = 200000, p = 4;
  Eigen::MatrixXd g(n, p);
  const double sigma = 2.0;
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < n; ++i) g(i, j) = sigma * rng.normal();
  WeightingInfo info;
  const Eigen::MatrixXd w = weighting_from_contributions(g, &info);
  CHECK_FALSE(info.identity_fallback);
  for (int a = 0; a < p; ++a) {
    for (int b = 0; b < p; ++b) {
      const double expect = (a == b) ? 1.0 / (sigma * sigma) : 0.0;
      CHECK(w(a, b) == doctest::Approx(expect).scale(1.0).epsilon(0.02));
    }
  }
}

TEST_CASE("weighting matrix agrees with a direct two-pass covariance inverse") {
  Rng rng(14);
  const int n = 500, p = 6;
  Eigen::MatrixXd g(n, p);
  for (int j = 0; j < p; ++j) {
    for (int i = 0; i < n; ++i) g(i, j) = rng.normal() + 0.3 * j * rng.uniform();
  }
  const Eigen::RowVectorXd mu = g.colwise().mean();
  const Eigen::MatrixXd centered = g.rowwise() - mu;
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
  const Eigen::MatrixXd w_oracle = cov.inverse();
  const Eigen::MatrixXd w = weighting_from_contributions(g);
  CHECK((w - w_oracle).lpNorm<Eigen::Infinity>() /
            std::max(1.0, w_oracle.lpNorm<Eigen::Infinity>()) <=
        1e-8);
  // Bitwise determinism.
  const Eigen::MatrixXd w2 = weighting_from_contributions(g);
  CHECK((w.array() == w2.array()).all());
}

TEST_CASE("degenerate contributions fall back to the identity weighting") {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(50, 3);
  WeightingInfo info;
  const Eigen::MatrixXd w = weighting_from_contributions(g, &info);
  CHECK(info.identity_fallback);
  CHECK((w - Eigen::MatrixXd::Identity(3, 3)).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("gmm objective is the weighted quadratic form of the moments") {
  const FirmPanel panel = small_panel(120, 6, 15);
  const EstimationFrame frame = build_lagged_frame(panel);
  InstrumentPlan plan;
  plan.control_degree = 2;
  const GcfProblem problem(frame, plan);
  const int p = static_cast<int>(problem.selected().size());
  const Eigen::MatrixXd w = Eigen::MatrixXd::Identity(p, p);

  const Eigen::VectorXd m = problem.orthogonalized_moments(kTruth);
  CHECK(problem.objective(kTruth, w) == doctest::Approx(m.squaredNorm()).epsilon(1e-12));
  // Scaling the weighting scales the objective.
  CHECK(problem.objective(kTruth, 3.0 * w) ==
        doctest::Approx(3.0 * m.squaredNorm()).epsilon(1e-12));
  // Out-of-domain parameters get an infinite objective.
  CHECK(std::isinf(problem.objective(StructuralParams{0.3, 0.0, 0.95}, w)));
  CHECK(std::isinf(problem.objective(StructuralParams{-0.1, -1.0, 0.95}, w)));
}

TEST_CASE("objective separates the truth from parameter perturbations") {
  const FirmPanel panel = small_panel(1000, 12, 16);
  const EstimationFrame frame = build_lagged_frame(panel);
  InstrumentPlan plan;
  plan.control_degree = 2;
  const GcfProblem problem(frame, plan);
  const Eigen::MatrixXd w = problem.weighting_matrix(kTruth);
  const double f0 = problem.objective(kTruth, w);
  int better = 0, total = 0;
  for (double da : {-0.1, 0.1}) {
    for (double dr : {-0.3, 0.3}) {
      for (double dn : {-0.05, 0.05}) {
        StructuralParams theta{kTruth.alpha + da, kTruth.rho + dr, kTruth.nu + dn};
        ++total;
        if (problem.objective(theta, w) > f0) ++better;
      }
    }
  }
  CHECK(better == total);
}

TEST_CASE("parameter transform round trips and multistarts are deterministic") {
  Rng rng(17);
  for (int i = 0; i < 50; ++i) {
    const StructuralParams theta{0.02 + 0.96 * rng.uniform(), -3.0 + 2.9 * rng.uniform(),
                                 0.1 + 2.0 * rng.uniform()};
    const StructuralParams back = from_unconstrained(to_unconstrained(theta));
    CHECK(back.alpha == doctest::Approx(theta.alpha).epsilon(1e-12));
    CHECK(back.rho == doctest::Approx(theta.rho).epsilon(1e-12));
    CHECK(back.nu == doctest::Approx(theta.nu).epsilon(1e-12));
  }
  // Any transformed point maps into the admissible region.
  for (int i = 0; i < 50; ++i) {
    Eigen::Vector3d x(rng.normal() * 3, rng.normal() * 3, rng.normal() * 3);
    CHECK(from_unconstrained(x).in_domain());
  }
  const auto a = multistart_points(5);
  const auto b = multistart_points(5);
  REQUIRE(a.size() == 5);
  for (int i = 0; i < 5; ++i) CHECK((a[i].array() == b[i].array()).all());
  const auto c = multistart_points(8);
  CHECK(c.size() == 8);
  for (int i = 0; i < 5; ++i) CHECK((c[i].array() == a[i].array()).all());
  // The first start is the neutral point.
  const StructuralParams neutral = from_unconstrained(a[0]);
  CHECK(neutral.alpha == doctest::Approx(0.5));
  CHECK(neutral.rho == doctest::Approx(-0.5));
  CHECK(neutral.nu == doctest::Approx(1.0));
}

TEST_CASE("noiseless panel is recovered exactly") {
  // Zero noise and no latent heterogeneity: all variation comes from the
  // factor-price processes, the residual at the truth is identically
  // zero, and the minimizer is exact.
  DGPConfig config;
  config.n_firms = 400;
  config.n_periods = 10;
  config.seed = 19;
  config.eps_sd = 0.0;
  config.shock_delta1 = ShockProcessParams{10.0, 0.0, 0.0};
  config.shock_delta2 = ShockProcessParams{-1.3543, 0.0, 0.0};
  config.targets = MomentTargets{0.0, 0.0, 0.0, 0.0, 0.0};
  const FirmPanel panel = simulate_panel(config);
  InstrumentPlan plan;
  plan.control_degree = 2;
  EstimateOptions options;
  options.weighting = WeightingMode::kOracle;
  options.theta0 = kTruth;
  const EstimationResult r = estimate(panel, plan, options);
  CHECK(r.converged);
  CHECK(r.theta_hat.alpha == doctest::Approx(0.3).epsilon(1e-4));
  CHECK(r.theta_hat.rho == doctest::Approx(-1.0).epsilon(1e-4));
  CHECK(r.theta_hat.nu == doctest::Approx(0.95).epsilon(1e-4));
  CHECK(r.method == "gcf");
  CHECK(r.degree == 2);
}

TEST_CASE("row permutation leaves the estimate unchanged") {
  const FirmPanel panel = small_panel(150, 8, 20);
  const EstimationFrame frame = build_lagged_frame(panel);

  EstimationFrame shuffled = frame;
  std::vector<int> order(frame.rows());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(21);
  for (int i = static_cast<int>(order.size()) - 1; i > 0; --i) {
    std::swap(order[i], order[static_cast<int>(rng.uniform() * (i + 1))]);
  }
  auto permute = [&](const Eigen::VectorXd& src, Eigen::VectorXd& dst) {
    for (std::size_t r = 0; r < order.size(); ++r) dst[static_cast<Eigen::Index>(r)] = src[order[r]];
  };
  for (auto field :
       {&EstimationFrame::q, &EstimationFrame::p, &EstimationFrame::k, &EstimationFrame::v,
        &EstimationFrame::pK, &EstimationFrame::pV, &EstimationFrame::q_lag,
        &EstimationFrame::p_lag, &EstimationFrame::k_lag, &EstimationFrame::v_lag,
        &EstimationFrame::pK_lag, &EstimationFrame::pV_lag, &EstimationFrame::omega,
        &EstimationFrame::eps}) {
    permute(frame.*field, shuffled.*field);
  }

  InstrumentPlan plan;
  plan.control_degree = 2;
  const GcfProblem a(frame, plan);
  const GcfProblem b(shuffled, plan);
  REQUIRE(a.selected() == b.selected());
  const Eigen::VectorXd ma = a.orthogonalized_moments(kTruth);
  const Eigen::VectorXd mb = b.orthogonalized_moments(kTruth);
  CHECK((ma - mb).lpNorm<Eigen::Infinity>() <= 1e-8);
}

TEST_CASE("orthogonality diagnostic separates the two moment constructions") {
  const FirmPanel panel = small_panel(400, 10, 22);
  const EstimationFrame frame = build_lagged_frame(panel);
  InstrumentPlan plan;
  plan.control_degree = 2;
  const OrthogonalityReport rep =
      check_neyman_orthogonality(kTruth, frame, plan, 8);
  CHECK(rep.n_directions == 8);
  CHECK(rep.orthogonalized_pass == 8);
  CHECK(rep.raw_fail >= 7);
  CHECK(rep.contrast_holds);
  CHECK(rep.max_richardson_spread <= 1e-6);
  for (double s : rep.orthogonalized_stat) CHECK(s <= 1e-3);
}

TEST_CASE("directional derivative of the orthogonalized moments is exactly computable") {
  const FirmPanel panel = small_panel(120, 6, 23);
  const EstimationFrame frame = build_lagged_frame(panel);
  InstrumentPlan plan;
  plan.control_degree = 2;
  const GcfProblem problem(frame, plan, /*keep_control_basis=*/true);
  const Eigen::MatrixXd& b = problem.control_basis();
  const Eigen::Index nb = b.cols();

  SUBCASE("zero directions give zero derivatives") {
    const DirectionalDerivatives d = directional_derivatives(
        problem, kTruth, Eigen::VectorXd::Zero(nb), Eigen::VectorXd::Zero(nb),
        {1e-2, 1e-3});
    CHECK(d.orthogonalized.lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(d.raw_fixed_h.lpNorm<Eigen::Infinity>() == 0.0);
  }

  SUBCASE("constant residual shift exposes the raw moments' slope") {
    // zeta = B * e1 is the constant column: the fixed-control derivative
    // of moment k is -mean(phi_k * 1) while the orthogonalized one stays
    // at zero because the projection absorbs constants.
    Eigen::VectorXd zeta = Eigen::VectorXd::Zero(nb);
    zeta[0] = 1.0;
    const DirectionalDerivatives d = directional_derivatives(
        problem, kTruth, Eigen::VectorXd::Zero(nb), zeta, {1e-2, 1e-3});
    CHECK(d.orthogonalized.lpNorm<Eigen::Infinity>() <= 1e-10);
    const Eigen::MatrixXd& phi_raw = problem.phi_raw();
    for (Eigen::Index j = 0; j < d.raw_fixed_h.size(); ++j) {
      const double expect = -phi_raw.col(j).mean();
      CHECK(d.raw_fixed_h[j] == doctest::Approx(expect).scale(1.0).epsilon(1e-8));
    }
  }
}
