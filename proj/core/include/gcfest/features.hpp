#ifndef GCFEST_FEATURES_HPP
#define GCFEST_FEATURES_HPP

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace gcfest {

// A multi-index assigns one polynomial degree per variable; the basis
// column is the product of univariate Hermite polynomials with those
// degrees evaluated on standardized data.
using MultiIndex = std::vector<int>;

// All multi-indices over n_vars variables with total degree <= degree, in
// graded lexicographic order (by total degree, then lexicographically).
// That order is the canonical column order everywhere in the toolkit.
std::vector<MultiIndex> complete_multi_indices(int n_vars, int degree);

// Probabilists' Hermite polynomial He_n(x) via the three-term recurrence
// He_{n+1}(x) = x He_n(x) - n He_{n-1}(x).
double hermite_value(int degree, double x);

// Frozen description of a polynomial feature map: which variables, what
// total degree, and the affine standardization applied before evaluating
// the polynomials.  Freezing the standardization makes the map a fixed
// function of the raw data, so it can be reapplied to new inputs.
struct FeatureSpec {
  std::vector<std::string> variable_names;
  int degree = 0;
  std::vector<std::pair<double, double>> standardization;  // (mean, sd) per variable
};

// Builds a spec with per-column sample mean and sd taken from data.
// Throws std::invalid_argument when a column has zero variance, naming
// the variable.
FeatureSpec make_feature_spec(const std::vector<std::string>& variable_names,
                              int degree, const Eigen::MatrixXd& data);

struct DesignMatrix {
  Eigen::MatrixXd values;
  std::vector<MultiIndex> labels;
  std::vector<int> selected;  // column subset established to be independent
};

// Evaluates the complete Hermite basis a FeatureSpec describes on data
// (one column per variable, in FeatureSpec order).  selected is
// initialized to all columns;
// callers that need a certified independent subset run
// greedy_rank_select on the matrix and overwrite it.
DesignMatrix hermite_basis(const FeatureSpec& spec, const Eigen::MatrixXd& data);

// Greedy left-to-right column selection by modified Gram-Schmidt with
// re-orthogonalization: a column enters iff its residual norm against the
// span of the columns already kept exceeds tol.  tol < 0 picks
// max(rows, cols) * eps * sigma_max(m), the usual numerical-rank cutoff.
std::vector<int> greedy_rank_select(const Eigen::MatrixXd& m, double tol = -1.0);

// Least-squares machinery for a fixed, full-column-rank regressor block,
// factored once via Householder QR with the thin Q kept explicitly.
class Projector {
 public:
  explicit Projector(const Eigen::MatrixXd& columns);

  Eigen::VectorXd fitted(const Eigen::VectorXd& y) const;
  Eigen::MatrixXd fitted(const Eigen::MatrixXd& ys) const;
  Eigen::VectorXd coefficients(const Eigen::VectorXd& y) const;
  Eigen::Index rank() const { return q_.cols(); }

 private:
  Eigen::MatrixXd q_;  // n x p, orthonormal columns
  Eigen::MatrixXd r_;  // p x p, upper triangular
};

// Orthogonal projection of each target column onto the span of the
// selected columns of the design.
Eigen::MatrixXd project(const DesignMatrix& design, const Eigen::MatrixXd& target);

}  // namespace gcfest

#endif
