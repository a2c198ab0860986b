#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "canopy/raster.hpp"

namespace canopy {

struct CoreStats {
  double mu_h = 0.0;     // mean normalized height over canopy cells
  double sigma_h = 0.0;  // population standard deviation, same domain
  double t_core = 0.0;   // mu_h + alpha * sigma_h
};

/// Row-major label grid; 0 = background, tree ids 1..K.
struct LabelRaster {
  GridSpec spec;
  std::vector<std::uint32_t> labels;

  std::uint32_t at(int row, int col) const {
    return labels[static_cast<std::size_t>(row) * spec.width + col];
  }
  std::uint32_t& at(int row, int col) {
    return labels[static_cast<std::size_t>(row) * spec.width + col];
  }
  std::uint32_t max_label() const;
};

struct Marker {
  int row = 0;
  int col = 0;
  std::uint32_t label = 0;
  double edt_value = 0.0;  // cells
};

struct TreeArea {
  std::uint32_t label = 0;
  double raw_area_m2 = 0.0;
  double corrected_area_m2 = 0.0;
};

CoreStats core_stats(const BevRaster& normalized, const CanopyMask& mask,
                     double alpha);

/// Canopy cells strictly above t_core.
CanopyMask tree_core_mask(const BevRaster& normalized, const CanopyMask& mask,
                          const CoreStats& stats);

/// Exact Euclidean distance (cell units) from each true cell to the nearest
/// false cell; the region outside the grid counts as false. False cells -> 0.
BevRaster edt(const CanopyMask& mask);

/// 8-neighborhood local maxima of the distance map inside the core mask.
/// Equal-valued plateaus collapse to the plateau component's centroid cell;
/// candidates sorted by distance descending (ties row-major) are accepted
/// greedily at pairwise separation >= min_peak_distance_cells.
std::vector<Marker> find_markers(const BevRaster& edt_map,
                                 const CanopyMask& core,
                                 double min_peak_distance_cells);

/// Marker-controlled priority flood over -(normalized height), strictly
/// constrained to the canopy mask. Taller cells flood first; ties resolve in
/// insertion (FIFO) order, so the result is deterministic.
LabelRaster watershed(const BevRaster& normalized, const CanopyMask& canopy,
                      const std::vector<Marker>& markers);

/// Mass-conservation correction: per-label raw areas scaled so their sum
/// equals the canopy footprint area.
std::vector<TreeArea> correct_areas(const LabelRaster& labels,
                                    double footprint_m2, double cell_size_m);

// LBLR1: same ASCII header as BEVR1 with magic "LBLR1", then little-endian
// uint32 labels, row-major.
void write_lblr1(const LabelRaster& labels, const std::filesystem::path& path);
LabelRaster read_lblr1(const std::filesystem::path& path);

/// PGM preview with labels mapped to a deterministic grayscale cycle.
void write_label_pgm(const LabelRaster& labels,
                     const std::filesystem::path& path);

}  // namespace canopy
