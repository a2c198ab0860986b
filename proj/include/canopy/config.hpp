#pragma once

#include <filesystem>
#include <string>

namespace canopy {

struct PipelineConfig {
  double cell_size_m = 0.5;
  double h_min = 0.15;               // relative canopy threshold, (0,1)
  double core_alpha = 0.5;           // T_core = mu_h + core_alpha * sigma_h
  double min_peak_distance_m = 2.0;
  double sigma_conifer_threshold = 0.2;
  double latitude_deg = 45.0;
  double lai_broadleaf = 5.5;
  double lai_conifer = 3.0;
  double rho_broadleaf = 3.8;        // kg of fuel per m^2 of leaf area
  double rho_conifer = 2.5;
  double ground_percentile = 2.0;
  double top_percentile = 98.0;
};

/// Flat key=value text file; '#' starts a comment. Missing keys keep the
/// defaults above; unknown keys warn on stderr. Out-of-range or non-numeric
/// values throw TypeMismatch naming the key.
PipelineConfig read_config(const std::filesystem::path& path);

/// Applies one key=value assignment (shared by the file parser and CLI
/// overrides).
void apply_config_key(PipelineConfig& cfg, const std::string& key,
                      const std::string& value);

}  // namespace canopy
