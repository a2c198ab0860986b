#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "canopy/geometry.hpp"

namespace canopy {

struct GridSpec {
  int width = 0;
  int height = 0;
  double cell_size_m = 0.0;
  // World coordinates of the center of cell (row 0, col 0).
  double origin_x_m = 0.0;
  double origin_y_m = 0.0;

  std::size_t cells() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  double cell_center_x(int col) const { return origin_x_m + col * cell_size_m; }
  double cell_center_y(int row) const { return origin_y_m + row * cell_size_m; }
  bool operator==(const GridSpec&) const = default;
};

/// Row-major real-valued grid; NaN marks no-data cells.
struct BevRaster {
  GridSpec spec;
  std::vector<double> values;

  double& at(int row, int col) {
    return values[static_cast<std::size_t>(row) * spec.width + col];
  }
  double at(int row, int col) const {
    return values[static_cast<std::size_t>(row) * spec.width + col];
  }
};

struct CanopyMask {
  GridSpec spec;
  std::vector<std::uint8_t> mask;  // 0/1

  bool at(int row, int col) const {
    return mask[static_cast<std::size_t>(row) * spec.width + col] != 0;
  }
  void set(int row, int col, bool v) {
    mask[static_cast<std::size_t>(row) * spec.width + col] = v ? 1 : 0;
  }
  std::size_t count() const;
};

struct RasterPair {
  BevRaster height;   // per-cell max z, NaN where empty
  BevRaster density;  // per-cell point count, 0 where empty
};

/// Orthogonal projection of a leveled metric cloud onto a grid whose bounds
/// are the cloud's XY bounding box padded by one cell on every side.
RasterPair rasterize(const PointCloud& cloud, double cell_size_m);

struct NormalizedHeight {
  BevRaster raster;  // values in [0,1], NaN preserved
  double z_ground = 0.0;
  double z_top = 0.0;
};

/// Robust percentile normalization: cell -> clamp((z - z_ground) /
/// (z_top - z_ground), 0, 1). Throws DegenerateRange on near-flat scenes.
NormalizedHeight normalize_height(const BevRaster& height,
                                  double ground_percentile,
                                  double top_percentile);

/// True iff the normalized value is finite and strictly above h_min.
CanopyMask canopy_mask(const BevRaster& normalized, double h_min);

/// True-cell count times cell area, m^2.
double footprint_area(const CanopyMask& mask);

// --- file formats -----------------------------------------------------------
// BEVR1: ASCII line "BEVR1 <width> <height> <cell_size_m> <origin_x_m>
// <origin_y_m>\n" followed by width*height little-endian float32, row-major,
// NaN for no-data. MASK1 uses the same header with one 0/1 byte per cell.

void write_bevr1(const BevRaster& raster, const std::filesystem::path& path);
BevRaster read_bevr1(const std::filesystem::path& path);

void write_mask1(const CanopyMask& mask, const std::filesystem::path& path);
CanopyMask read_mask1(const std::filesystem::path& path);

/// 8-bit PGM preview; values scaled 0-255 over [0,1], NaN -> 0.
void write_pgm_preview(const BevRaster& normalized,
                       const std::filesystem::path& path);

}  // namespace canopy
