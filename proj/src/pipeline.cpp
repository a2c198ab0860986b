#include "canopy/pipeline.hpp"

#include <cmath>

#include "canopy/errors.hpp"

namespace canopy {

RasterStage run_raster_stage(const PointCloud& metric_cloud,
                             const Vec3& camera_centroid,
                             const PipelineConfig& config) {
  const LevelResult leveled = pca_level(metric_cloud, camera_centroid);
  RasterPair rasters = rasterize(leveled.cloud, config.cell_size_m);

  RasterStage stage;
  stage.height = std::move(rasters.height);
  stage.density = std::move(rasters.density);
  stage.normalized = normalize_height(stage.height, config.ground_percentile,
                                      config.top_percentile);
  stage.canopy = canopy_mask(stage.normalized.raster, config.h_min);
  stage.footprint_m2 = footprint_area(stage.canopy);
  return stage;
}

RasterStage raster_stage_from_files(const BevRaster& height,
                                    const BevRaster& density,
                                    const CanopyMask& canopy,
                                    const PipelineConfig& config) {
  RasterStage stage;
  stage.height = height;
  stage.density = density;
  stage.normalized = normalize_height(stage.height, config.ground_percentile,
                                      config.top_percentile);
  stage.canopy = canopy;
  stage.footprint_m2 = footprint_area(stage.canopy);
  return stage;
}

SegmentStage run_segment_stage(const RasterStage& raster,
                               const PipelineConfig& config) {
  SegmentStage stage;
  stage.stats =
      core_stats(raster.normalized.raster, raster.canopy, config.core_alpha);
  stage.core = tree_core_mask(raster.normalized.raster, raster.canopy,
                              stage.stats);
  stage.core_edt = edt(stage.core);
  const double min_dist_cells =
      std::ceil(config.min_peak_distance_m / config.cell_size_m);
  stage.markers = find_markers(stage.core_edt, stage.core, min_dist_cells);
  stage.labels = watershed(raster.normalized.raster, raster.canopy,
                           stage.markers);
  return stage;
}

InventoryStage run_inventory_stage(const RasterStage& raster,
                                   const LabelRaster& labels,
                                   const PipelineConfig& config) {
  InventoryStage stage;
  stage.areas =
      correct_areas(labels, raster.footprint_m2, labels.spec.cell_size_m);
  stage.records =
      build_tree_records(labels, raster.normalized, stage.areas, config);
  stage.summary = fuel_load(stage.records, raster.footprint_m2, config);

  // Mass conservation must survive the whole chain.
  double corrected_sum = 0.0;
  for (const auto& r : stage.records) corrected_sum += r.corrected_area_m2;
  if (std::abs(corrected_sum - raster.footprint_m2) >
      1e-6 * std::max(1.0, raster.footprint_m2)) {
    throw DegenerateError(
        "inventory: corrected areas do not sum to the canopy footprint");
  }
  return stage;
}

}  // namespace canopy
