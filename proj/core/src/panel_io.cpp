#include "gcfest/panel_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "gcfest/errors.hpp"

namespace gcfest {

namespace {

using nlohmann::json;

std::string fmt17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

json shock_to_json(const ShockProcessParams& p) {
  return json{{"mean", p.mean}, {"variance", p.variance}, {"autocorr", p.autocorr}};
}

ShockProcessParams shock_from_json(const json& j) {
  ShockProcessParams p;
  p.mean = j.at("mean").get<double>();
  p.variance = j.at("variance").get<double>();
  p.autocorr = j.at("autocorr").get<double>();
  return p;
}

json ar1_to_json(const Ar1Coefficients& c) {
  return json{{"intercept", c.intercept},
              {"slope", c.slope},
              {"innovation_sd", c.innovation_sd}};
}

Ar1Coefficients ar1_from_json(const json& j) {
  Ar1Coefficients c;
  c.intercept = j.at("intercept").get<double>();
  c.slope = j.at("slope").get<double>();
  c.innovation_sd = j.at("innovation_sd").get<double>();
  return c;
}

json config_to_json(const DGPConfig& c) {
  return json{
      {"structural",
       {{"alpha", c.structural.alpha}, {"rho", c.structural.rho}, {"nu", c.structural.nu}}},
      {"shock_pK", shock_to_json(c.shock_pK)},
      {"shock_pV", shock_to_json(c.shock_pV)},
      {"shock_delta1", shock_to_json(c.shock_delta1)},
      {"shock_delta2", shock_to_json(c.shock_delta2)},
      {"targets",
       {{"mean", c.targets.mean},
        {"variance", c.targets.variance},
        {"autocorr", c.targets.autocorr},
        {"corr_delta1", c.targets.corr_delta1},
        {"corr_delta2", c.targets.corr_delta2}}},
      {"eps_sd", c.eps_sd},
      {"n_firms", c.n_firms},
      {"n_periods", c.n_periods},
      {"burn_in", c.burn_in},
      {"seed", c.seed}};
}

DGPConfig config_from_json(const json& j) {
  DGPConfig c;
  const json& s = j.at("structural");
  c.structural.alpha = s.at("alpha").get<double>();
  c.structural.rho = s.at("rho").get<double>();
  c.structural.nu = s.at("nu").get<double>();
  c.shock_pK = shock_from_json(j.at("shock_pK"));
  c.shock_pV = shock_from_json(j.at("shock_pV"));
  c.shock_delta1 = shock_from_json(j.at("shock_delta1"));
  c.shock_delta2 = shock_from_json(j.at("shock_delta2"));
  const json& t = j.at("targets");
  c.targets.mean = t.at("mean").get<double>();
  c.targets.variance = t.at("variance").get<double>();
  c.targets.autocorr = t.at("autocorr").get<double>();
  c.targets.corr_delta1 = t.at("corr_delta1").get<double>();
  c.targets.corr_delta2 = t.at("corr_delta2").get<double>();
  c.eps_sd = j.at("eps_sd").get<double>();
  c.n_firms = j.at("n_firms").get<int>();
  c.n_periods = j.at("n_periods").get<int>();
  c.burn_in = j.at("burn_in").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

const char* kObservedHeader = "firm_id,period,q,p,k,v,pK,pV";
const char* kLatentHeader = ",q_star,omega,delta1,delta2,xi,eps";

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& s, const char* what, std::size_t lineno) {
  char* end = nullptr;
  const double x = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw ConfigError("read_panel: bad " + std::string(what) + " at line " +
                      std::to_string(lineno) + ": '" + s + "'");
  }
  return x;
}

}  // namespace

std::string meta_path_for(const std::string& csv_path) {
  const std::string suffix = ".csv";
  if (csv_path.size() > suffix.size() &&
      csv_path.compare(csv_path.size() - suffix.size(), suffix.size(), suffix) == 0) {
    return csv_path.substr(0, csv_path.size() - suffix.size()) + ".meta.json";
  }
  return csv_path + ".meta.json";
}

void write_panel(const FirmPanel& panel, const DGPConfig& config,
                 const std::string& csv_path, bool include_latents) {
  const bool latents = include_latents && panel.has_latents();

  std::ofstream csv(csv_path);
  if (!csv) throw ConfigError("write_panel: cannot open " + csv_path + " for writing");
  csv << kObservedHeader;
  if (latents) csv << kLatentHeader;
  csv << '\n';
  for (int i = 0; i < panel.n_firms; ++i) {
    for (int t = 0; t < panel.n_periods; ++t) {
      const std::size_t j = panel.idx(i, t);
      csv << i << ',' << t << ',' << fmt17(panel.q[j]) << ',' << fmt17(panel.p[j])
          << ',' << fmt17(panel.k[j]) << ',' << fmt17(panel.v[j]) << ','
          << fmt17(panel.pK[j]) << ',' << fmt17(panel.pV[j]);
      if (latents) {
        csv << ',' << fmt17(panel.q_star[j]) << ',' << fmt17(panel.omega[j]) << ','
            << fmt17(panel.delta1[j]) << ',' << fmt17(panel.delta2[j]) << ','
            << fmt17(panel.xi[j]) << ',' << fmt17(panel.eps[j]);
      }
      csv << '\n';
    }
  }
  if (!csv.good()) throw ConfigError("write_panel: write to " + csv_path + " failed");
  csv.close();

  json meta{{"format", "gcfest-panel-v1"},
            {"latents", latents},
            {"n_firms", panel.n_firms},
            {"n_periods", panel.n_periods},
            {"dgp", config_to_json(config)}};
  const SolvedProcesses solved = solve_processes(config);
  meta["solved"] = json{{"pK", ar1_to_json(solved.pK)},
                        {"pV", ar1_to_json(solved.pV)},
                        {"delta1", ar1_to_json(solved.delta1)},
                        {"delta2", ar1_to_json(solved.delta2)},
                        {"law_of_motion",
                         {{"mu", solved.lom.mu},
                          {"rho_omega", solved.lom.rho_omega},
                          {"rho_delta1", solved.lom.rho_delta1},
                          {"rho_delta2", solved.lom.rho_delta2},
                          {"innovation_var", solved.lom.innovation_var}}}};

  std::ofstream mf(meta_path_for(csv_path));
  if (!mf) {
    throw ConfigError("write_panel: cannot open " + meta_path_for(csv_path) +
                      " for writing");
  }
  mf << meta.dump(2) << '\n';
}

std::pair<FirmPanel, PanelMetadata> read_panel(const std::string& csv_path) {
  std::ifstream csv(csv_path);
  if (!csv) throw ConfigError("read_panel: cannot open " + csv_path);

  std::string header;
  if (!std::getline(csv, header)) throw ConfigError("read_panel: empty file " + csv_path);
  if (!header.empty() && header.back() == '\r') header.pop_back();

  bool latents = false;
  if (header == std::string(kObservedHeader) + kLatentHeader) {
    latents = true;
  } else if (header != kObservedHeader) {
    throw ConfigError("read_panel: unexpected header in " + csv_path + ": '" + header +
                      "'");
  }
  const std::size_t ncols = latents ? 14 : 8;

  struct Row {
    int firm, period;
    std::vector<double> vals;
  };
  std::vector<Row> rows;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(csv, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto parts = split_csv_line(line);
    if (parts.size() != ncols) {
      throw ConfigError("read_panel: expected " + std::to_string(ncols) +
                        " fields at line " + std::to_string(lineno) + ", got " +
                        std::to_string(parts.size()));
    }
    Row r;
    r.firm = static_cast<int>(parse_double(parts[0], "firm_id", lineno));
    r.period = static_cast<int>(parse_double(parts[1], "period", lineno));
    r.vals.reserve(ncols - 2);
    for (std::size_t c = 2; c < ncols; ++c) {
      r.vals.push_back(parse_double(parts[c], "value", lineno));
    }
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw ConfigError("read_panel: no data rows in " + csv_path);

  int n_firms = 0, n_periods = 0;
  for (const Row& r : rows) {
    n_firms = std::max(n_firms, r.firm + 1);
    n_periods = std::max(n_periods, r.period + 1);
  }
  if (rows.size() != static_cast<std::size_t>(n_firms) * n_periods) {
    throw ConfigError("read_panel: unbalanced panel in " + csv_path + " (" +
                      std::to_string(rows.size()) + " rows for " +
                      std::to_string(n_firms) + " firms x " +
                      std::to_string(n_periods) + " periods)");
  }

  FirmPanel panel;
  panel.n_firms = n_firms;
  panel.n_periods = n_periods;
  const std::size_t n = rows.size();
  std::vector<std::vector<double>*> cols = {&panel.q, &panel.p, &panel.k,
                                            &panel.v, &panel.pK, &panel.pV};
  if (latents) {
    for (auto* c : {&panel.q_star, &panel.omega, &panel.delta1, &panel.delta2,
                    &panel.xi, &panel.eps}) {
      cols.push_back(c);
    }
  }
  for (auto* c : cols) c->assign(n, 0.0);

  std::vector<char> seen(n, 0);
  for (const Row& r : rows) {
    if (r.firm < 0 || r.period < 0) {
      throw ConfigError("read_panel: negative firm_id or period in " + csv_path);
    }
    const std::size_t j = panel.idx(r.firm, r.period);
    if (seen[j]) {
      throw ConfigError("read_panel: duplicate (firm_id, period) = (" +
                        std::to_string(r.firm) + ", " + std::to_string(r.period) + ")");
    }
    seen[j] = 1;
    for (std::size_t c = 0; c < cols.size(); ++c) (*cols[c])[j] = r.vals[c];
  }

  std::ifstream mf(meta_path_for(csv_path));
  if (!mf) {
    throw ConfigError("read_panel: missing sidecar " + meta_path_for(csv_path));
  }
  json meta;
  try {
    mf >> meta;
  } catch (const json::exception& e) {
    throw ConfigError("read_panel: malformed sidecar " + meta_path_for(csv_path) +
                      ": " + e.what());
  }

  PanelMetadata pm;
  try {
    if (meta.at("format").get<std::string>() != "gcfest-panel-v1") {
      throw ConfigError("read_panel: unsupported format '" +
                        meta.at("format").get<std::string>() + "'");
    }
    pm.latents = meta.at("latents").get<bool>();
    pm.config = config_from_json(meta.at("dgp"));
    const json& s = meta.at("solved");
    pm.solved.pK = ar1_from_json(s.at("pK"));
    pm.solved.pV = ar1_from_json(s.at("pV"));
    pm.solved.delta1 = ar1_from_json(s.at("delta1"));
    pm.solved.delta2 = ar1_from_json(s.at("delta2"));
    const json& l = s.at("law_of_motion");
    pm.solved.lom.mu = l.at("mu").get<double>();
    pm.solved.lom.rho_omega = l.at("rho_omega").get<double>();
    pm.solved.lom.rho_delta1 = l.at("rho_delta1").get<double>();
    pm.solved.lom.rho_delta2 = l.at("rho_delta2").get<double>();
    pm.solved.lom.innovation_var = l.at("innovation_var").get<double>();
  } catch (const json::exception& e) {
    throw ConfigError("read_panel: sidecar " + meta_path_for(csv_path) +
                      " is missing fields: " + e.what());
  }
  if (pm.latents != latents) {
    throw ConfigError("read_panel: sidecar latents flag disagrees with CSV header");
  }
  const int meta_firms = meta.at("n_firms").get<int>();
  const int meta_periods = meta.at("n_periods").get<int>();
  if (meta_firms != n_firms || meta_periods != n_periods) {
    throw ConfigError("read_panel: sidecar dimensions (" + std::to_string(meta_firms) +
                      " x " + std::to_string(meta_periods) +
                      ") disagree with CSV (" + std::to_string(n_firms) + " x " +
                      std::to_string(n_periods) + ")");
  }
  return {std::move(panel), std::move(pm)};
}

}  // namespace gcfest
