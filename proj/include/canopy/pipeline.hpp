#pragma once

#include <vector>

#include "canopy/config.hpp"
#include "canopy/inventory.hpp"
#include "canopy/raster.hpp"
#include "canopy/segmentation.hpp"

namespace canopy {

/// Everything downstream of metric recovery, bundled so the CLI stages and
/// the monolithic run share one code path.
struct RasterStage {
  BevRaster height;   // meters, pre-normalization
  BevRaster density;
  NormalizedHeight normalized;
  CanopyMask canopy;
  double footprint_m2 = 0.0;
};

struct SegmentStage {
  CoreStats stats;
  CanopyMask core;
  BevRaster core_edt;
  std::vector<Marker> markers;
  LabelRaster labels;
};

struct InventoryStage {
  std::vector<TreeArea> areas;
  std::vector<TreeRecord> records;
  StandSummary summary;
};

/// Levels the metric cloud with the camera centroid, rasterizes it and
/// extracts the canopy footprint.
RasterStage run_raster_stage(const PointCloud& metric_cloud,
                             const Vec3& camera_centroid,
                             const PipelineConfig& config);

/// Re-derives the stage from persisted rasters (stage-wise CLI path).
RasterStage raster_stage_from_files(const BevRaster& height,
                                    const BevRaster& density,
                                    const CanopyMask& canopy,
                                    const PipelineConfig& config);

SegmentStage run_segment_stage(const RasterStage& raster,
                               const PipelineConfig& config);

InventoryStage run_inventory_stage(const RasterStage& raster,
                                   const LabelRaster& labels,
                                   const PipelineConfig& config);

}  // namespace canopy
