#ifndef GCFEST_PANEL_IO_HPP
#define GCFEST_PANEL_IO_HPP

#include <string>
#include <utility>

#include "gcfest/dgp.hpp"

namespace gcfest {

// A panel on disk is a CSV plus a JSON sidecar carrying the generating
// configuration and the solved process coefficients.  Doubles are written
// with 17 significant digits so a write/read round trip is bit-exact.
struct PanelMetadata {
  int format_version = 1;
  bool latents = false;
  DGPConfig config;
  SolvedProcesses solved;
};

std::string meta_path_for(const std::string& csv_path);

void write_panel(const FirmPanel& panel, const DGPConfig& config,
                 const std::string& csv_path, bool include_latents);

// Reads csv_path and its sidecar.  Throws ConfigError on malformed files,
// unbalanced panels, or a missing sidecar.
std::pair<FirmPanel, PanelMetadata> read_panel(const std::string& csv_path);

}  // namespace gcfest

#endif
