#include "doctest.h"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "gcfest/optim.hpp"

using namespace gcfest;

TEST_CASE("quadratic bowl is solved to tight tolerance") {
  // f(x) = (x - c)' A (x - c), A SPD with mixed curvature.
  Eigen::MatrixXd a(3, 3);
  a << 4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 2.0;
  Eigen::VectorXd c(3);
  c << 1.0, -2.0, 0.5;
  const auto f = [&](const Eigen::VectorXd& x) {
    return ((x - c).transpose() * a * (x - c)).value();
  };
  const BfgsResult r = minimize_bfgs(f, Eigen::VectorXd::Zero(3));
  CHECK(r.converged);
  CHECK((r.x - c).lpNorm<Eigen::Infinity>() <= 1e-6);
  CHECK(r.value <= 1e-10);
}

TEST_CASE("rosenbrock valley converges from the standard start") {
  const auto f = [](const Eigen::VectorXd& x) {
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    return a * a + 100.0 * b * b;
  };
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  const BfgsResult r = minimize_bfgs(f, x0);
  CHECK(r.converged);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("iteration cap is honored and reported") {
  const auto f = [](const Eigen::VectorXd& x) {
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    return a * a + 100.0 * b * b;
  };
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  BfgsOptions opts;
  opts.max_iterations = 3;
  const BfgsResult r = minimize_bfgs(f, x0, opts);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations <= 3);
  // Still made progress from f(x0) = 24.2.
  CHECK(r.value < f(x0));
}

TEST_CASE("non-finite regions act as barriers") {
  // Minimum of a shifted quadratic restricted to x > 0 via an infinite
  // penalty; the optimizer must stay in the feasible half-line.
  const auto f = [](const Eigen::VectorXd& x) {
    if (x[0] <= 0.0) return std::numeric_limits<double>::infinity();
    const double d = std::log(x[0]) - 1.0;
    return d * d;
  };
  Eigen::VectorXd x0(1);
  x0 << 0.5;
  const BfgsResult r = minimize_bfgs(f, x0);
  CHECK(r.converged);
  CHECK(r.x[0] == doctest::Approx(std::exp(1.0)).epsilon(1e-5));
}

TEST_CASE("already-optimal start returns immediately") {
  const auto f = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
  const BfgsResult r = minimize_bfgs(f, Eigen::VectorXd::Zero(4));
  CHECK(r.converged);
  CHECK(r.iterations <= 1);
  CHECK(r.value == doctest::Approx(0.0));
}
