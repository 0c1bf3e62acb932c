#ifndef GCFEST_FRAME_HPP
#define GCFEST_FRAME_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gcfest/dgp.hpp"

namespace gcfest {

// Estimation table: one row per (firm, period) with period >= 1, pairing
// each observation with its within-firm lag.  Latent columns ride along
// when the panel has them (simulated data); they are never used by the
// estimators, only by tests and diagnostics.
struct EstimationFrame {
  Eigen::VectorXd q, p, k, v, pK, pV;
  Eigen::VectorXd q_lag, p_lag, k_lag, v_lag, pK_lag, pV_lag;
  Eigen::VectorXd omega, eps;
  bool has_latents = false;

  Eigen::Index rows() const { return q.size(); }
};

// Throws std::invalid_argument when the panel has fewer than 2 periods.
EstimationFrame build_lagged_frame(const FirmPanel& panel);

// Column lookup by name; valid names are q,p,k,v,pK,pV and their _lag
// variants.  Throws ConfigError for anything else.
const Eigen::VectorXd& frame_column(const EstimationFrame& frame,
                                    const std::string& name);

Eigen::MatrixXd frame_columns(const EstimationFrame& frame,
                              const std::vector<std::string>& names);

}  // namespace gcfest

#endif
