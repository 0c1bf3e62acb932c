#include "gcfest/study.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "gcfest/baseline.hpp"
#include "gcfest/errors.hpp"
#include "gcfest/rng.hpp"

namespace gcfest {

namespace {

using nlohmann::json;

constexpr std::uint64_t kReplicationDomain = 0x5245504CULL;

std::string fmt17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char ch : s) {
    if (ch == '"') out += "\"\"";
    else out += ch;
  }
  out += "\"";
  return out;
}

const char* weighting_name(WeightingMode mode) {
  switch (mode) {
    case WeightingMode::kOracle: return "oracle";
    case WeightingMode::kTwoStep: return "two_step";
    case WeightingMode::kIdentity: return "identity";
  }
  return "oracle";
}

WeightingMode weighting_from_name(const std::string& name) {
  if (name == "oracle") return WeightingMode::kOracle;
  if (name == "two_step") return WeightingMode::kTwoStep;
  if (name == "identity") return WeightingMode::kIdentity;
  throw ConfigError("study.weighting: expected oracle, two_step, or identity, got '" +
                    name + "'");
}

}  // namespace

void StudyConfig::validate() const {
  dgp.validate();
  if (n_replications < 1) throw ConfigError("StudyConfig: replications must be >= 1");
  if (jobs < 0) throw ConfigError("StudyConfig: jobs must be >= 0");
  if (gcf_degrees.empty() && !run_baseline) {
    throw ConfigError("StudyConfig: no estimators configured");
  }
  for (const int d : gcf_degrees) {
    if (d < 1) throw ConfigError("StudyConfig: gcf degree must be >= 1");
  }
  if (phi_degree < 1 || first_stage_degree < 1 || g_degree < 1) {
    throw ConfigError("StudyConfig: degrees must be >= 1");
  }
  if (n_starts < 1) throw ConfigError("StudyConfig: n_starts must be >= 1");
}

StudyConfig study_from_reader(ConfigReader& r) {
  StudyConfig c;
  c.dgp = dgp_from_reader(r);
  c.n_replications = r.get_int("study.replications", c.n_replications);
  c.master_seed = r.get_u64("study.master_seed", c.master_seed);
  c.jobs = r.get_int("study.jobs", c.jobs);
  c.run_baseline = r.get_bool("study.baseline", c.run_baseline);
  c.phi_degree = r.get_int("study.phi_degree", c.phi_degree);
  c.first_stage_degree = r.get_int("study.first_stage_degree", c.first_stage_degree);
  c.g_degree = r.get_int("study.g_degree", c.g_degree);
  c.n_starts = r.get_int("study.n_starts", c.n_starts);
  c.weighting =
      weighting_from_name(r.get_string("study.weighting", weighting_name(c.weighting)));

  const std::string degrees = r.get_string("study.gcf_degrees", "");
  if (!degrees.empty()) {
    c.gcf_degrees.clear();
    std::istringstream in(degrees);
    std::string token;
    while (std::getline(in, token, ',')) {
      try {
        c.gcf_degrees.push_back(std::stoi(token));
      } catch (const std::exception&) {
        throw ConfigError("study.gcf_degrees: expected comma-separated integers, got '" +
                          degrees + "'");
      }
    }
  }
  return c;
}

std::string estimator_label(const std::string& method, int degree) {
  if (method == "gcf") return "gcf-d" + std::to_string(degree);
  return method;
}

MCSummary run_study(const StudyConfig& config) {
  config.validate();

  const int s = config.n_replications;
  const int n_estimators =
      static_cast<int>(config.gcf_degrees.size()) + (config.run_baseline ? 1 : 0);

  MCSummary summary;
  summary.config = config;
  summary.records.resize(static_cast<std::size_t>(s) * n_estimators);

  int jobs = config.jobs == 0
                 ? static_cast<int>(std::thread::hardware_concurrency())
                 : config.jobs;
  if (jobs < 1) jobs = 1;
  if (jobs > s) jobs = s;

  std::atomic<int> next{0};
  auto worker = [&]() {
    while (true) {
      const int rep = next.fetch_add(1);
      if (rep >= s) break;

      const std::uint64_t seed =
          derive_seed(config.master_seed, static_cast<std::uint64_t>(rep),
                      kReplicationDomain);
      DGPConfig dgp = config.dgp;
      dgp.seed = seed;

      const std::size_t base = static_cast<std::size_t>(rep) * n_estimators;
      auto init_record = [&](std::size_t slot, const std::string& label) {
        ReplicationRecord& rec = summary.records[base + slot];
        rec.replication = rep;
        rec.seed = seed;
        rec.estimator = label;
        rec.ok = false;
      };
      std::size_t slot = 0;
      for (const int d : config.gcf_degrees) init_record(slot++, estimator_label("gcf", d));
      if (config.run_baseline) init_record(slot++, estimator_label("baseline", 0));

      FirmPanel panel;
      try {
        panel = simulate_panel(dgp);
      } catch (const std::exception& e) {
        for (std::size_t j = 0; j < static_cast<std::size_t>(n_estimators); ++j) {
          summary.records[base + j].error = std::string("simulate: ") + e.what();
        }
        continue;
      }

      EstimateOptions options;
      options.weighting = config.weighting;
      options.theta0 = config.dgp.structural;
      options.n_starts = config.n_starts;
      options.panel_seed = seed;

      slot = 0;
      for (const int d : config.gcf_degrees) {
        ReplicationRecord& rec = summary.records[base + slot++];
        try {
          InstrumentPlan plan;
          plan.phi_degree = config.phi_degree;
          plan.control_degree = d;
          rec.result = estimate(panel, plan, options);
          rec.ok = true;
        } catch (const std::exception& e) {
          rec.error = e.what();
        }
      }
      if (config.run_baseline) {
        ReplicationRecord& rec = summary.records[base + slot++];
        try {
          BaselineConfig bc;
          bc.first_stage_degree = config.first_stage_degree;
          bc.g_degree = config.g_degree;
          bc.plan.phi_degree = config.phi_degree;
          rec.result = estimate_baseline(panel, bc, options);
          rec.ok = true;
        } catch (const std::exception& e) {
          rec.error = e.what();
        }
      }
    }
  };

  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // Aggregate in fixed estimator order; records are already in
  // (replication, estimator) order, so sums do not depend on scheduling.
  std::vector<std::string> labels;
  for (const int d : config.gcf_degrees) labels.push_back(estimator_label("gcf", d));
  if (config.run_baseline) labels.push_back("baseline");

  for (std::size_t e = 0; e < labels.size(); ++e) {
    EstimatorSummary es;
    es.name = labels[e];
    double sum = 0.0, sumsq = 0.0;
    for (int rep = 0; rep < s; ++rep) {
      const ReplicationRecord& rec =
          summary.records[static_cast<std::size_t>(rep) * n_estimators + e];
      if (rec.ok) {
        ++es.n_success;
        sum += rec.result.avg_log_markup;
        const double dev = rec.result.avg_log_markup - kTrueAvgLogMarkup;
        sumsq += dev * dev;
      } else {
        ++es.n_failed;
      }
    }
    if (es.n_success > 0) {
      es.mean_avg_log_markup = sum / es.n_success;
      es.bias = es.mean_avg_log_markup - kTrueAvgLogMarkup;
      es.mse = sumsq / es.n_success;
    }
    summary.estimators.push_back(es);
  }
  return summary;
}

void write_study_outputs(const MCSummary& summary, const std::string& dir) {
  std::filesystem::create_directories(dir);

  {
    std::ofstream csv(dir + "/replications.csv");
    if (!csv) throw ConfigError("write_study_outputs: cannot open replications.csv");
    csv << "replication,seed,estimator,status,alpha,rho,nu,avg_log_markup,objective,"
           "selected_moments,iterations,converged,error\n";
    for (const ReplicationRecord& rec : summary.records) {
      csv << rec.replication << ',' << rec.seed << ',' << rec.estimator << ','
          << (rec.ok ? "ok" : "failed") << ',';
      if (rec.ok) {
        csv << fmt17(rec.result.theta_hat.alpha) << ','
            << fmt17(rec.result.theta_hat.rho) << ',' << fmt17(rec.result.theta_hat.nu)
            << ',' << fmt17(rec.result.avg_log_markup) << ','
            << fmt17(rec.result.objective_value) << ','
            << rec.result.selected_moment_count << ',' << rec.result.iterations << ','
            << (rec.result.converged ? "true" : "false") << ',';
      } else {
        csv << ",,,,,,,,";
      }
      csv << csv_escape(rec.error) << '\n';
    }
  }

  {
    std::ofstream csv(dir + "/histogram.csv");
    if (!csv) throw ConfigError("write_study_outputs: cannot open histogram.csv");
    csv << "estimator,replication,avg_log_markup\n";
    for (const ReplicationRecord& rec : summary.records) {
      if (rec.ok) {
        csv << rec.estimator << ',' << rec.replication << ','
            << fmt17(rec.result.avg_log_markup) << '\n';
      }
    }
  }

  {
    json j;
    j["study"] = {{"replications", summary.config.n_replications},
                  {"master_seed", summary.config.master_seed},
                  {"n_firms", summary.config.dgp.n_firms},
                  {"n_periods", summary.config.dgp.n_periods},
                  {"gcf_degrees", summary.config.gcf_degrees},
                  {"baseline", summary.config.run_baseline},
                  {"weighting", weighting_name(summary.config.weighting)},
                  {"phi_degree", summary.config.phi_degree}};
    j["true_avg_log_markup"] = kTrueAvgLogMarkup;
    j["estimators"] = json::array();
    for (const EstimatorSummary& es : summary.estimators) {
      j["estimators"].push_back({{"name", es.name},
                                 {"n_success", es.n_success},
                                 {"n_failed", es.n_failed},
                                 {"mean_avg_log_markup", es.mean_avg_log_markup},
                                 {"bias", es.bias},
                                 {"mse", es.mse}});
    }
    std::ofstream out(dir + "/summary.json");
    if (!out) throw ConfigError("write_study_outputs: cannot open summary.json");
    out << j.dump(2) << '\n';
  }
}

void report(const std::string& summary_path, std::ostream& out) {
  std::ifstream in(summary_path);
  if (!in) throw ConfigError("report: cannot open " + summary_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("report: malformed summary file: " + std::string(e.what()));
  }

  char line[160];
  std::snprintf(line, sizeof(line), "%-12s %12s %12s %12s %6s %9s", "estimator",
                "mean", "bias", "mse", "S", "failures");
  out << line << '\n';
  try {
    for (const json& es : j.at("estimators")) {
      std::snprintf(line, sizeof(line), "%-12s %12.5f %+12.5f %12.5f %6d %9d",
                    es.at("name").get<std::string>().c_str(),
                    es.at("mean_avg_log_markup").get<double>(),
                    es.at("bias").get<double>(), es.at("mse").get<double>(),
                    es.at("n_success").get<int>(), es.at("n_failed").get<int>());
      out << line << '\n';
    }
  } catch (const json::exception& e) {
    throw ConfigError("report: summary file is missing fields: " + std::string(e.what()));
  }
}

}  // namespace gcfest
