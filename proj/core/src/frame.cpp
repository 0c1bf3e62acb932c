#include "gcfest/frame.hpp"

#include <stdexcept>

#include "gcfest/errors.hpp"

namespace gcfest {

EstimationFrame build_lagged_frame(const FirmPanel& panel) {
  if (panel.n_periods < 2) {
    throw ConfigError(
        "build_lagged_frame: need at least 2 periods to form lags, got " +
        std::to_string(panel.n_periods));
  }
  const Eigen::Index rows =
      static_cast<Eigen::Index>(panel.n_firms) * (panel.n_periods - 1);

  EstimationFrame f;
  for (auto* col : {&f.q, &f.p, &f.k, &f.v, &f.pK, &f.pV, &f.q_lag, &f.p_lag,
                    &f.k_lag, &f.v_lag, &f.pK_lag, &f.pV_lag}) {
    col->resize(rows);
  }
  f.has_latents = panel.has_latents();
  if (f.has_latents) {
    f.omega.resize(rows);
    f.eps.resize(rows);
  }

  Eigen::Index r = 0;
  for (int i = 0; i < panel.n_firms; ++i) {
    for (int t = 1; t < panel.n_periods; ++t, ++r) {
      const std::size_t cur = panel.idx(i, t);
      const std::size_t lag = panel.idx(i, t - 1);
      f.q[r] = panel.q[cur];
      f.p[r] = panel.p[cur];
      f.k[r] = panel.k[cur];
      f.v[r] = panel.v[cur];
      f.pK[r] = panel.pK[cur];
      f.pV[r] = panel.pV[cur];
      f.q_lag[r] = panel.q[lag];
      f.p_lag[r] = panel.p[lag];
      f.k_lag[r] = panel.k[lag];
      f.v_lag[r] = panel.v[lag];
      f.pK_lag[r] = panel.pK[lag];
      f.pV_lag[r] = panel.pV[lag];
      if (f.has_latents) {
        f.omega[r] = panel.omega[cur];
        f.eps[r] = panel.eps[cur];
      }
    }
  }
  return f;
}

const Eigen::VectorXd& frame_column(const EstimationFrame& frame,
                                    const std::string& name) {
  if (name == "q") return frame.q;
  if (name == "p") return frame.p;
  if (name == "k") return frame.k;
  if (name == "v") return frame.v;
  if (name == "pK") return frame.pK;
  if (name == "pV") return frame.pV;
  if (name == "q_lag") return frame.q_lag;
  if (name == "p_lag") return frame.p_lag;
  if (name == "k_lag") return frame.k_lag;
  if (name == "v_lag") return frame.v_lag;
  if (name == "pK_lag") return frame.pK_lag;
  if (name == "pV_lag") return frame.pV_lag;
  throw ConfigError("frame_column: unknown column '" + name + "'");
}

Eigen::MatrixXd frame_columns(const EstimationFrame& frame,
                              const std::vector<std::string>& names) {
  Eigen::MatrixXd out(frame.rows(), static_cast<Eigen::Index>(names.size()));
  for (std::size_t c = 0; c < names.size(); ++c) {
    out.col(static_cast<Eigen::Index>(c)) = frame_column(frame, names[c]);
  }
  return out;
}

}  // namespace gcfest
