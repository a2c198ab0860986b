#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "canopy/config.hpp"
#include "canopy/raster.hpp"
#include "canopy/segmentation.hpp"

namespace canopy {

enum class Species { Broadleaf, Conifer };

std::string species_name(Species s);

struct TreeRecord {
  std::uint32_t tree_id = 0;
  double centroid_x_m = 0.0;
  double centroid_y_m = 0.0;
  double raw_area_m2 = 0.0;
  double corrected_area_m2 = 0.0;
  double max_height_m = 0.0;
  double sigma_h_tree = 0.0;  // std of normalized heights over the tree cells
  Species species = Species::Broadleaf;
  double lai_effective = 0.0;  // LAI_sp * alpha_geo
  double fuel_kg = 0.0;
};

struct StandSummary {
  int n_trees = 0;
  double footprint_m2 = 0.0;
  double latitude_deg = 0.0;
  double alpha_geo = 0.0;
  double lai_broadleaf_effective = 0.0;
  double lai_conifer_effective = 0.0;
  double total_fuel_tons = 0.0;
};

/// Latitude correction for canopy architecture: 0.85 for |lat| >= 50,
/// 1.15 for |lat| < 23.5, 1.0 otherwise. Throws OutOfRange outside [-90,90].
double alpha_geo(double latitude_deg);

/// Conifer iff sigma_h_tree is strictly above the threshold.
Species classify_species(double sigma_h_tree, double threshold);

double effective_lai(Species species, double alpha_geo,
                     const PipelineConfig& config);

/// Per-tree measurements prior to fuel assignment, extracted from the label
/// raster: centroid, areas, height stats and the species class.
std::vector<TreeRecord> build_tree_records(const LabelRaster& labels,
                                           const NormalizedHeight& normalized,
                                           const std::vector<TreeArea>& areas,
                                           const PipelineConfig& config);

/// Fills lai_effective and fuel_kg for every record and totals the stand:
/// fuel_kg = corrected_area * lai_effective * rho(species).
StandSummary fuel_load(std::vector<TreeRecord>& records, double footprint_m2,
                       const PipelineConfig& config);

/// Writes inventory.csv and summary.json into out_dir, 6-decimal fixed
/// formatting, byte-deterministic.
void write_reports(const std::vector<TreeRecord>& records,
                   const StandSummary& summary,
                   const std::filesystem::path& out_dir);

}  // namespace canopy
