#ifndef GCFEST_CONFIG_HPP
#define GCFEST_CONFIG_HPP

#include <map>
#include <set>
#include <string>

#include "gcfest/dgp.hpp"

namespace gcfest {

// Flat key=value configuration with dotted section names, e.g.
// dgp.n_firms=5000.  '#' starts a comment; blank lines are skipped;
// duplicate and unrecognized keys are errors.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config_text(const std::string& text);
ConfigMap parse_config_file(const std::string& path);

// Typed readers; every call records the key as consumed so callers can
// reject unknown keys afterwards.
class ConfigReader {
 public:
  explicit ConfigReader(ConfigMap map) : map_(std::move(map)) {}

  double get_double(const std::string& key, double fallback);
  int get_int(const std::string& key, int fallback);
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
  bool get_bool(const std::string& key, bool fallback);
  std::string get_string(const std::string& key, const std::string& fallback);

  // Throws ConfigError naming every key never consumed by a getter.
  void ensure_all_consumed() const;

 private:
  const std::string* find(const std::string& key);

  ConfigMap map_;
  std::set<std::string> consumed_;
};

// Reads the dgp.* keys (all optional; defaults are the standard
// calibration baked into DGPConfig).
DGPConfig dgp_from_reader(ConfigReader& reader);

}  // namespace gcfest

#endif
