#ifndef GCFEST_RESULT_HPP
#define GCFEST_RESULT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "gcfest/ces.hpp"

namespace gcfest {

// Outcome of one estimator run on one panel, serializable to JSON so the
// CLI and the study harness share a single record format.
struct EstimationResult {
  std::string method;            // "gcf" or "baseline"
  int degree = 0;                // control degree (gcf) / law-of-motion degree (baseline)
  StructuralParams theta_hat;
  double avg_log_markup = 0.0;
  double objective_value = 0.0;
  int selected_moment_count = 0;
  long n_rows = 0;

  // Optimizer diagnostics, from the best start.
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  double gradient_norm = 0.0;

  // Weighting-matrix diagnostics.
  double weighting_condition = 0.0;
  bool weighting_ridged = false;
  bool weighting_identity_fallback = false;

  std::uint64_t panel_seed = 0;  // echo of the generating seed when known
  std::vector<std::string> warnings;
};

std::string to_json(const EstimationResult& r);
EstimationResult result_from_json(const std::string& text);

}  // namespace gcfest

#endif
