#include "gcfest/result.hpp"

#include <nlohmann/json.hpp>

#include "gcfest/errors.hpp"

namespace gcfest {

using nlohmann::json;

std::string to_json(const EstimationResult& r) {
  json j{{"method", r.method},
         {"degree", r.degree},
         {"theta_hat", {{"alpha", r.theta_hat.alpha}, {"rho", r.theta_hat.rho}, {"nu", r.theta_hat.nu}}},
         {"avg_log_markup", r.avg_log_markup},
         {"objective_value", r.objective_value},
         {"selected_moment_count", r.selected_moment_count},
         {"n_rows", r.n_rows},
         {"iterations", r.iterations},
         {"evaluations", r.evaluations},
         {"converged", r.converged},
         {"gradient_norm", r.gradient_norm},
         {"weighting_condition", r.weighting_condition},
         {"weighting_ridged", r.weighting_ridged},
         {"weighting_identity_fallback", r.weighting_identity_fallback},
         {"panel_seed", r.panel_seed},
         {"warnings", r.warnings}};
  return j.dump(2);
}

EstimationResult result_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("result_from_json: parse failure: ") + e.what());
  }
  EstimationResult r;
  try {
    r.method = j.at("method").get<std::string>();
    r.degree = j.at("degree").get<int>();
    const json& th = j.at("theta_hat");
    r.theta_hat.alpha = th.at("alpha").get<double>();
    r.theta_hat.rho = th.at("rho").get<double>();
    r.theta_hat.nu = th.at("nu").get<double>();
    r.avg_log_markup = j.at("avg_log_markup").get<double>();
    r.objective_value = j.at("objective_value").get<double>();
    r.selected_moment_count = j.at("selected_moment_count").get<int>();
    r.n_rows = j.at("n_rows").get<long>();
    r.iterations = j.at("iterations").get<int>();
    r.evaluations = j.at("evaluations").get<int>();
    r.converged = j.at("converged").get<bool>();
    r.gradient_norm = j.at("gradient_norm").get<double>();
    r.weighting_condition = j.at("weighting_condition").get<double>();
    r.weighting_ridged = j.at("weighting_ridged").get<bool>();
    r.weighting_identity_fallback = j.at("weighting_identity_fallback").get<bool>();
    r.panel_seed = j.at("panel_seed").get<std::uint64_t>();
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("result_from_json: missing field: ") + e.what());
  }
  return r;
}

}  // namespace gcfest
