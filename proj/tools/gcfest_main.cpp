#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "gcfest/baseline.hpp"
#include "gcfest/config.hpp"
#include "gcfest/errors.hpp"
#include "gcfest/gcf.hpp"
#include "gcfest/panel_io.hpp"
#include "gcfest/study.hpp"

namespace {

using namespace gcfest;

// Every subcommand accepts the same flat key=value schema; sections it
// does not use are still validated so a typo never passes silently.
struct FullConfig {
  DGPConfig dgp;
  StudyConfig study;
  int ortho_directions = 20;
  int ortho_control_degree = 4;
  std::uint64_t ortho_seed = 0x0047C0DEULL;
};

FullConfig load_config(const std::string& path) {
  ConfigReader reader(path.empty() ? ConfigMap{} : parse_config_file(path));
  FullConfig full;
  full.study = study_from_reader(reader);  // consumes dgp.* too
  full.dgp = full.study.dgp;
  full.ortho_directions = reader.get_int("ortho.directions", full.ortho_directions);
  full.ortho_control_degree =
      reader.get_int("ortho.control_degree", full.ortho_control_degree);
  full.ortho_seed = reader.get_u64("ortho.seed", full.ortho_seed);
  reader.ensure_all_consumed();
  return full;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                 bool keep_latents) {
  const FullConfig full = load_config(config_path);
  std::filesystem::create_directories(out_dir);
  const FirmPanel panel = simulate_panel(full.dgp);
  const std::string csv = out_dir + "/panel.csv";
  write_panel(panel, full.dgp, csv, keep_latents);
  std::cout << "wrote " << csv << " (" << panel.n_firms << " firms x "
            << panel.n_periods << " periods" << (keep_latents ? ", with latents" : "")
            << ") and " << meta_path_for(csv) << "\n";
  return 0;
}

int cmd_estimate(const std::string& panel_path, const std::string& method, int degree,
                 int phi_degree, int first_stage_degree, bool two_step,
                 const std::string& out_path) {
  auto [panel, meta] = read_panel(panel_path);

  EstimateOptions options;
  options.weighting = two_step ? WeightingMode::kTwoStep : WeightingMode::kOracle;
  options.theta0 = meta.config.structural;
  options.panel_seed = meta.config.seed;

  EstimationResult result;
  if (method == "gcf") {
    InstrumentPlan plan;
    plan.phi_degree = phi_degree;
    plan.control_degree = degree;
    result = estimate(panel, plan, options);
  } else if (method == "baseline") {
    BaselineConfig bc;
    bc.first_stage_degree = first_stage_degree;
    bc.g_degree = degree;
    bc.plan.phi_degree = phi_degree;
    result = estimate_baseline(panel, bc, options);
  } else {
    throw ConfigError("estimate: method must be gcf or baseline, got '" + method + "'");
  }

  const std::string text = to_json(result);
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw ConfigError("estimate: cannot open " + out_path + " for writing");
    out << text << '\n';
  }
  char line[256];
  std::snprintf(line, sizeof(line),
                "%s: alpha=%.4f rho=%.4f nu=%.4f avg_log_markup=%.5f objective=%.3e%s",
                estimator_label(result.method, result.degree).c_str(),
                result.theta_hat.alpha, result.theta_hat.rho, result.theta_hat.nu,
                result.avg_log_markup, result.objective_value,
                result.converged ? "" : " (not converged)");
  std::cout << line << "\n";
  if (!out_path.empty()) std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_montecarlo(const std::string& config_path, const std::string& out_dir,
                   int jobs_override) {
  FullConfig full = load_config(config_path);
  if (jobs_override >= 0) full.study.jobs = jobs_override;
  const MCSummary summary = run_study(full.study);
  write_study_outputs(summary, out_dir);
  report(out_dir + "/summary.json", std::cout);
  std::cout << "wrote " << out_dir << "/{replications.csv, histogram.csv, summary.json}\n";
  return 0;
}

int cmd_report(const std::string& summary_path) {
  report(summary_path, std::cout);
  return 0;
}

int cmd_check_orthogonality(const std::string& config_path, int directions_override,
                            std::uint64_t seed_override, bool have_seed) {
  FullConfig full = load_config(config_path);
  if (directions_override > 0) full.ortho_directions = directions_override;
  if (have_seed) full.ortho_seed = seed_override;

  const FirmPanel panel = simulate_panel(full.dgp);
  const EstimationFrame frame = build_lagged_frame(panel);
  InstrumentPlan plan;
  plan.phi_degree = full.study.phi_degree;
  plan.control_degree = full.ortho_control_degree;

  const OrthogonalityReport rep = check_neyman_orthogonality(
      full.dgp.structural, frame, plan, full.ortho_directions, {1e-2, 1e-3, 1e-4},
      full.ortho_seed);

  std::printf("moments: %d   directions: %d   tolerance: %.1e (relative)\n",
              rep.n_moments, rep.n_directions, rep.tol);
  std::printf("%-10s %16s %16s\n", "direction", "orthogonalized", "fixed-control");
  for (int d = 0; d < rep.n_directions; ++d) {
    std::printf("%-10d %16.3e %16.3e\n", d, rep.orthogonalized_stat[d],
                rep.raw_stat[d]);
  }
  std::printf("orthogonalized within tolerance: %d/%d\n", rep.orthogonalized_pass,
              rep.n_directions);
  std::printf("fixed-control beyond tolerance:  %d/%d\n", rep.raw_fail,
              rep.n_directions);
  std::printf("max step-size disagreement: %.3e\n", rep.max_richardson_spread);
  std::printf("contrast %s\n", rep.contrast_holds ? "HOLDS" : "DOES NOT HOLD");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Panel simulation and production-function estimation toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir, out_path, panel_path, summary_path;
  std::string method = "gcf";
  int degree = 4;
  int phi_degree = 4;
  int first_stage_degree = 4;
  bool keep_latents = false;
  bool two_step = false;
  int jobs = -1;
  int directions = 0;
  std::uint64_t ortho_seed = 0;

  CLI::App* sim = app.add_subcommand("simulate", "Simulate a firm panel to CSV");
  sim->add_option("--config", config_path, "key=value config file");
  sim->add_option("--out", out_dir, "output directory")->required();
  sim->add_flag("--keep-latents", keep_latents,
                "include latent columns (omega, delta, xi, eps) in the CSV");

  CLI::App* est = app.add_subcommand("estimate", "Estimate parameters from a panel CSV");
  est->add_option("--panel", panel_path, "panel CSV (sidecar .meta.json required)")
      ->required();
  est->add_option("--method", method, "gcf or baseline")
      ->check(CLI::IsMember({"gcf", "baseline"}));
  est->add_option("--degree", degree,
                  "control degree (gcf) / law-of-motion degree (baseline)");
  est->add_option("--phi-degree", phi_degree, "instrument basis total degree");
  est->add_option("--first-stage-degree", first_stage_degree,
                  "baseline first-stage total degree");
  est->add_flag("--two-step", two_step,
                "data-only two-step weighting instead of the sidecar's true parameters");
  est->add_option("--out", out_path, "write the result record (JSON) here");

  CLI::App* mc = app.add_subcommand("montecarlo", "Run a replication study");
  mc->add_option("--config", config_path, "key=value config file");
  mc->add_option("--out", out_dir, "output directory")->required();
  mc->add_option("--jobs", jobs, "worker threads (0 = hardware)");

  CLI::App* rep = app.add_subcommand("report", "Print the table for a study summary");
  rep->add_option("--summary", summary_path, "summary.json from montecarlo")->required();

  CLI::App* ortho = app.add_subcommand(
      "check-orthogonality", "Directional-derivative diagnostic of the moment conditions");
  ortho->add_option("--config", config_path, "key=value config file");
  ortho->add_option("--directions", directions, "number of random directions");
  CLI::Option* seed_opt =
      ortho->add_option("--seed", ortho_seed, "seed for the direction draws");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (sim->parsed()) return cmd_simulate(config_path, out_dir, keep_latents);
    if (est->parsed()) {
      return cmd_estimate(panel_path, method, degree, phi_degree, first_stage_degree,
                          two_step, out_path);
    }
    if (mc->parsed()) return cmd_montecarlo(config_path, out_dir, jobs);
    if (rep->parsed()) return cmd_report(summary_path);
    if (ortho->parsed()) {
      return cmd_check_orthogonality(config_path, directions, ortho_seed,
                                     seed_opt->count() > 0);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
