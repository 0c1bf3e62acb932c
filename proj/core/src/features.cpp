#include "gcfest/features.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace gcfest {

std::vector<MultiIndex> complete_multi_indices(int n_vars, int degree) {
  if (n_vars < 1) throw std::invalid_argument("complete_multi_indices: n_vars must be >= 1");
  if (degree < 0) throw std::invalid_argument("complete_multi_indices: degree must be >= 0");

  std::vector<MultiIndex> out;
  MultiIndex current(n_vars, 0);
  // Depth-first enumeration of exponents in lexicographic order within
  // each total degree.
  auto fill = [&](auto&& self, int pos, int remaining) -> void {
    if (pos == n_vars - 1) {
      current[pos] = remaining;
      out.push_back(current);
      return;
    }
    for (int d = remaining; d >= 0; --d) {
      current[pos] = d;
      self(self, pos + 1, remaining - d);
    }
    current[pos] = 0;
  };
  for (int total = 0; total <= degree; ++total) fill(fill, 0, total);
  return out;
}

double hermite_value(int degree, double x) {
  if (degree < 0) throw std::invalid_argument("hermite_value: degree must be >= 0");
  if (degree == 0) return 1.0;
  double prev = 1.0;
  double cur = x;
  for (int n = 1; n < degree; ++n) {
    const double next = x * cur - n * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

FeatureSpec make_feature_spec(const std::vector<std::string>& variable_names,
                              int degree, const Eigen::MatrixXd& data) {
  if (static_cast<Eigen::Index>(variable_names.size()) != data.cols()) {
    throw std::invalid_argument("make_feature_spec: name count " +
                                std::to_string(variable_names.size()) +
                                " does not match column count " +
                                std::to_string(data.cols()));
  }
  if (data.rows() < 2) {
    throw std::invalid_argument("make_feature_spec: need at least 2 rows");
  }
  FeatureSpec spec;
  spec.variable_names = variable_names;
  spec.degree = degree;
  spec.standardization.reserve(variable_names.size());
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    const double mean = data.col(c).mean();
    const double ss = (data.col(c).array() - mean).square().sum();
    const double sd = std::sqrt(ss / static_cast<double>(data.rows() - 1));
    if (!(sd > 0.0)) {
      throw std::invalid_argument("make_feature_spec: variable '" + variable_names[c] +
                                  "' has zero variance");
    }
    spec.standardization.emplace_back(mean, sd);
  }
  return spec;
}

DesignMatrix hermite_basis(const FeatureSpec& spec, const Eigen::MatrixXd& data) {
  const int m = static_cast<int>(spec.variable_names.size());
  if (data.cols() != m) {
    throw std::invalid_argument("hermite_basis: expected " + std::to_string(m) +
                                " data columns, got " + std::to_string(data.cols()));
  }
  if (spec.standardization.size() != static_cast<std::size_t>(m)) {
    throw std::invalid_argument("hermite_basis: spec standardization is incomplete");
  }
  const Eigen::Index n = data.rows();
  const int d = spec.degree;

  // He_0..He_d per variable, evaluated on the standardized column.
  std::vector<Eigen::MatrixXd> uni(m);
  for (int c = 0; c < m; ++c) {
    const auto [mean, sd] = spec.standardization[c];
    if (!(sd > 0.0)) {
      throw std::invalid_argument("hermite_basis: variable '" + spec.variable_names[c] +
                                  "' has nonpositive sd in spec");
    }
    const Eigen::ArrayXd x = (data.col(c).array() - mean) / sd;
    Eigen::MatrixXd h(n, d + 1);
    h.col(0).setOnes();
    if (d >= 1) h.col(1) = x.matrix();
    for (int deg = 1; deg < d; ++deg) {
      h.col(deg + 1) =
          (x * h.col(deg).array() - static_cast<double>(deg) * h.col(deg - 1).array())
              .matrix();
    }
    uni[c] = std::move(h);
  }

  DesignMatrix out;
  out.labels = complete_multi_indices(m, d);
  out.values.resize(n, static_cast<Eigen::Index>(out.labels.size()));
  for (std::size_t j = 0; j < out.labels.size(); ++j) {
    Eigen::ArrayXd col = Eigen::ArrayXd::Ones(n);
    for (int c = 0; c < m; ++c) {
      const int deg = out.labels[j][c];
      if (deg > 0) col *= uni[c].col(deg).array();
    }
    out.values.col(static_cast<Eigen::Index>(j)) = col.matrix();
  }
  out.selected.resize(out.labels.size());
  for (std::size_t j = 0; j < out.labels.size(); ++j) out.selected[j] = static_cast<int>(j);
  return out;
}

namespace {

// Largest singular value by power iteration on m'm; deterministic start.
double spectral_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::VectorXd v = Eigen::VectorXd::Ones(m.cols());
  v /= v.norm();
  double s2 = 0.0;
  for (int it = 0; it < 50; ++it) {
    Eigen::VectorXd w = m.transpose() * (m * v);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    s2 = norm;
    v = w / norm;
  }
  return std::sqrt(s2);
}

}  // namespace

std::vector<int> greedy_rank_select(const Eigen::MatrixXd& m, double tol) {
  const Eigen::Index n = m.rows();
  const Eigen::Index p = m.cols();
  if (tol < 0.0) {
    const double smax = spectral_norm(m);
    tol = static_cast<double>(std::max(n, p)) *
          std::numeric_limits<double>::epsilon() * smax;
  }

  std::vector<int> selected;
  Eigen::MatrixXd q(n, p);  // orthonormal columns kept so far
  Eigen::Index kept = 0;
  for (Eigen::Index j = 0; j < p; ++j) {
    Eigen::VectorXd r = m.col(j);
    // Two MGS sweeps keep orthogonality near machine precision.
    for (int sweep = 0; sweep < 2; ++sweep) {
      for (Eigen::Index c = 0; c < kept; ++c) {
        r.noalias() -= q.col(c) * q.col(c).dot(r);
      }
    }
    const double norm = r.norm();
    if (norm > tol) {
      q.col(kept) = r / norm;
      ++kept;
      selected.push_back(static_cast<int>(j));
    }
  }
  return selected;
}

Projector::Projector(const Eigen::MatrixXd& columns) {
  const Eigen::Index n = columns.rows();
  const Eigen::Index p = columns.cols();
  if (p == 0 || n < p) {
    throw std::invalid_argument("Projector: need rows >= cols >= 1, got " +
                                std::to_string(n) + " x " + std::to_string(p));
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(columns);
  q_ = qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
  r_ = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  const double rmax = r_.diagonal().cwiseAbs().maxCoeff();
  const double rmin = r_.diagonal().cwiseAbs().minCoeff();
  if (!(rmin > 0.0) || rmax / rmin > 1e14) {
    throw std::invalid_argument(
        "Projector: columns are numerically rank deficient; select a full-rank "
        "subset first");
  }
}

Eigen::VectorXd Projector::fitted(const Eigen::VectorXd& y) const {
  return q_ * (q_.transpose() * y);
}

Eigen::MatrixXd Projector::fitted(const Eigen::MatrixXd& ys) const {
  return q_ * (q_.transpose() * ys);
}

Eigen::VectorXd Projector::coefficients(const Eigen::VectorXd& y) const {
  return r_.triangularView<Eigen::Upper>().solve(q_.transpose() * y);
}

Eigen::MatrixXd project(const DesignMatrix& design, const Eigen::MatrixXd& target) {
  if (target.rows() != design.values.rows()) {
    throw std::invalid_argument("project: target rows do not match design rows");
  }
  Eigen::MatrixXd cols(design.values.rows(),
                       static_cast<Eigen::Index>(design.selected.size()));
  for (std::size_t j = 0; j < design.selected.size(); ++j) {
    const int c = design.selected[j];
    if (c < 0 || c >= design.values.cols()) {
      throw std::invalid_argument("project: selected column index out of range");
    }
    cols.col(static_cast<Eigen::Index>(j)) = design.values.col(c);
  }
  Projector proj(cols);
  return proj.fitted(target);
}

}  // namespace gcfest
