#include "gcfest/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "gcfest/errors.hpp"

namespace gcfest {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

ConfigMap parse_config_text(const std::string& text) {
  ConfigMap map;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key=value, got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    }
    if (map.count(key)) {
      throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" +
                        key + "'");
    }
    map[key] = value;
  }
  return map;
}

ConfigMap parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

const std::string* ConfigReader::find(const std::string& key) {
  const auto it = map_.find(key);
  if (it == map_.end()) return nullptr;
  consumed_.insert(key);
  return &it->second;
}

double ConfigReader::get_double(const std::string& key, double fallback) {
  const std::string* v = find(key);
  if (!v) return fallback;
  char* end = nullptr;
  const double x = std::strtod(v->c_str(), &end);
  if (end == v->c_str() || *end != '\0') {
    throw ConfigError("config key '" + key + "': expected a number, got '" + *v + "'");
  }
  return x;
}

int ConfigReader::get_int(const std::string& key, int fallback) {
  const std::string* v = find(key);
  if (!v) return fallback;
  char* end = nullptr;
  const long x = std::strtol(v->c_str(), &end, 10);
  if (end == v->c_str() || *end != '\0') {
    throw ConfigError("config key '" + key + "': expected an integer, got '" + *v + "'");
  }
  return static_cast<int>(x);
}

std::uint64_t ConfigReader::get_u64(const std::string& key, std::uint64_t fallback) {
  const std::string* v = find(key);
  if (!v) return fallback;
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v->c_str(), &end, 10);
  if (end == v->c_str() || *end != '\0') {
    throw ConfigError("config key '" + key + "': expected an unsigned integer, got '" +
                      *v + "'");
  }
  return static_cast<std::uint64_t>(x);
}

bool ConfigReader::get_bool(const std::string& key, bool fallback) {
  const std::string* v = find(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
  if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + *v + "'");
}

std::string ConfigReader::get_string(const std::string& key, const std::string& fallback) {
  const std::string* v = find(key);
  return v ? *v : fallback;
}

void ConfigReader::ensure_all_consumed() const {
  std::string unknown;
  for (const auto& [key, value] : map_) {
    if (!consumed_.count(key)) {
      if (!unknown.empty()) unknown += ", ";
      unknown += key;
    }
  }
  if (!unknown.empty()) {
    throw ConfigError("unknown config keys: " + unknown);
  }
}

DGPConfig dgp_from_reader(ConfigReader& r) {
  DGPConfig c;
  c.structural.alpha = r.get_double("dgp.alpha", c.structural.alpha);
  c.structural.rho = r.get_double("dgp.rho", c.structural.rho);
  c.structural.nu = r.get_double("dgp.nu", c.structural.nu);
  c.eps_sd = r.get_double("dgp.eps_sd", c.eps_sd);
  c.n_firms = r.get_int("dgp.n_firms", c.n_firms);
  c.n_periods = r.get_int("dgp.n_periods", c.n_periods);
  c.burn_in = r.get_int("dgp.burn_in", c.burn_in);
  c.seed = r.get_u64("dgp.seed", c.seed);

  auto shock = [&](const std::string& prefix, ShockProcessParams& s) {
    s.mean = r.get_double(prefix + ".mean", s.mean);
    s.variance = r.get_double(prefix + ".variance", s.variance);
    s.autocorr = r.get_double(prefix + ".autocorr", s.autocorr);
  };
  shock("dgp.pK", c.shock_pK);
  shock("dgp.pV", c.shock_pV);
  shock("dgp.delta1", c.shock_delta1);
  shock("dgp.delta2", c.shock_delta2);

  c.targets.mean = r.get_double("dgp.omega.mean", c.targets.mean);
  c.targets.variance = r.get_double("dgp.omega.variance", c.targets.variance);
  c.targets.autocorr = r.get_double("dgp.omega.autocorr", c.targets.autocorr);
  c.targets.corr_delta1 = r.get_double("dgp.omega.corr_delta1", c.targets.corr_delta1);
  c.targets.corr_delta2 = r.get_double("dgp.omega.corr_delta2", c.targets.corr_delta2);
  return c;
}

}  // namespace gcfest
