#ifndef GCFEST_ERRORS_HPP
#define GCFEST_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace gcfest {

// Bad user input: malformed config files, unknown keys, out-of-range values.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A calibration target that no parameter vector can attain.
struct InfeasibleError : std::runtime_error {
  explicit InfeasibleError(const std::string& msg) : std::runtime_error(msg) {}
};

// A numerical routine failed to converge or the problem has no solution
// (e.g. an unbounded profit maximization).
struct SolverError : std::runtime_error {
  explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace gcfest

#endif
