#include "canopy/inventory.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "canopy/errors.hpp"

namespace canopy {

std::string species_name(Species s) {
  return s == Species::Broadleaf ? "broadleaf" : "conifer";
}

double alpha_geo(double latitude_deg) {
  if (latitude_deg < -90.0 || latitude_deg > 90.0 ||
      std::isnan(latitude_deg)) {
    throw OutOfRange("alpha_geo: latitude " + std::to_string(latitude_deg) +
                     " outside [-90, 90]");
  }
  const double abs_lat = std::abs(latitude_deg);
  if (abs_lat >= 50.0) return 0.85;   // boreal: clumped needle shoots
  if (abs_lat < 23.5) return 1.15;    // tropical: multi-layer stratification
  return 1.0;
}

Species classify_species(double sigma_h_tree, double threshold) {
  return sigma_h_tree > threshold ? Species::Conifer : Species::Broadleaf;
}

double effective_lai(Species species, double alpha_geo,
                     const PipelineConfig& config) {
  const double base =
      species == Species::Broadleaf ? config.lai_broadleaf : config.lai_conifer;
  return base * alpha_geo;
}

std::vector<TreeRecord> build_tree_records(const LabelRaster& labels,
                                           const NormalizedHeight& normalized,
                                           const std::vector<TreeArea>& areas,
                                           const PipelineConfig& config) {
  if (areas.empty()) {
    throw EmptyInventory("build_tree_records: no tree areas");
  }
  const std::uint32_t k = static_cast<std::uint32_t>(areas.size());
  struct Accum {
    double sum_x = 0.0, sum_y = 0.0;
    double sum_v = 0.0, sum_v2 = 0.0, max_v = 0.0;
    std::size_t n = 0;
  };
  std::vector<Accum> acc(static_cast<std::size_t>(k) + 1);
  const GridSpec& spec = labels.spec;
  for (int row = 0; row < spec.height; ++row) {
    for (int col = 0; col < spec.width; ++col) {
      const std::uint32_t label = labels.at(row, col);
      if (label == 0 || label > k) continue;
      Accum& a = acc[label];
      a.sum_x += spec.cell_center_x(col);
      a.sum_y += spec.cell_center_y(row);
      const double v = normalized.raster.at(row, col);
      a.sum_v += v;
      a.sum_v2 += v * v;
      a.max_v = std::max(a.max_v, v);
      ++a.n;
    }
  }

  const double z_range = normalized.z_top - normalized.z_ground;
  std::vector<TreeRecord> records;
  records.reserve(k);
  for (std::uint32_t label = 1; label <= k; ++label) {
    const Accum& a = acc[label];
    if (a.n == 0) continue;  // every marker owns at least its own cell
    TreeRecord rec;
    rec.tree_id = label;
    rec.centroid_x_m = a.sum_x / static_cast<double>(a.n);
    rec.centroid_y_m = a.sum_y / static_cast<double>(a.n);
    rec.raw_area_m2 = areas[label - 1].raw_area_m2;
    rec.corrected_area_m2 = areas[label - 1].corrected_area_m2;
    rec.max_height_m = normalized.z_ground + a.max_v * z_range;
    const double mean = a.sum_v / static_cast<double>(a.n);
    rec.sigma_h_tree = std::sqrt(
        std::max(0.0, a.sum_v2 / static_cast<double>(a.n) - mean * mean));
    rec.species =
        classify_species(rec.sigma_h_tree, config.sigma_conifer_threshold);
    records.push_back(rec);
  }
  return records;
}

StandSummary fuel_load(std::vector<TreeRecord>& records, double footprint_m2,
                       const PipelineConfig& config) {
  if (records.empty()) {
    throw EmptyInventory("fuel_load: no tree records");
  }
  const double geo = alpha_geo(config.latitude_deg);
  double total_kg = 0.0;
  for (TreeRecord& rec : records) {
    rec.lai_effective = effective_lai(rec.species, geo, config);
    const double rho = rec.species == Species::Broadleaf ? config.rho_broadleaf
                                                         : config.rho_conifer;
    rec.fuel_kg = rec.corrected_area_m2 * rec.lai_effective * rho;
    total_kg += rec.fuel_kg;
  }
  StandSummary summary;
  summary.n_trees = static_cast<int>(records.size());
  summary.footprint_m2 = footprint_m2;
  summary.latitude_deg = config.latitude_deg;
  summary.alpha_geo = geo;
  summary.lai_broadleaf_effective =
      effective_lai(Species::Broadleaf, geo, config);
  summary.lai_conifer_effective = effective_lai(Species::Conifer, geo, config);
  summary.total_fuel_tons = total_kg / 1000.0;
  return summary;
}

void write_reports(const std::vector<TreeRecord>& records,
                   const StandSummary& summary,
                   const std::filesystem::path& out_dir) {
  if (records.empty()) {
    throw EmptyInventory("write_reports: no tree records");
  }

  {
    std::ofstream csv(out_dir / "inventory.csv");
    if (!csv) {
      throw IoFailure("cannot open for writing: " +
                      (out_dir / "inventory.csv").string());
    }
    csv << "tree_id,centroid_x_m,centroid_y_m,raw_area_m2,corrected_area_m2,"
           "max_height_m,sigma_h,species,lai_effective,fuel_kg\n";
    char buf[512];
    for (const TreeRecord& r : records) {
      std::snprintf(buf, sizeof(buf),
                    "%u,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%s,%.6f,%.6f\n",
                    r.tree_id, r.centroid_x_m, r.centroid_y_m, r.raw_area_m2,
                    r.corrected_area_m2, r.max_height_m, r.sigma_h_tree,
                    species_name(r.species).c_str(), r.lai_effective,
                    r.fuel_kg);
      csv << buf;
    }
    if (!csv) {
      throw IoFailure("write failed: " + (out_dir / "inventory.csv").string());
    }
  }

  {
    std::ofstream js(out_dir / "summary.json");
    if (!js) {
      throw IoFailure("cannot open for writing: " +
                      (out_dir / "summary.json").string());
    }
    char buf[768];
    std::snprintf(
        buf, sizeof(buf),
        "{\n"
        "  \"n_trees\": %d,\n"
        "  \"footprint_m2\": %.6f,\n"
        "  \"latitude_deg\": %.6f,\n"
        "  \"alpha_geo\": %.6f,\n"
        "  \"lai_by_species\": {\n"
        "    \"broadleaf\": %.6f,\n"
        "    \"conifer\": %.6f\n"
        "  },\n"
        "  \"total_fuel_tons\": %.6f\n"
        "}\n",
        summary.n_trees, summary.footprint_m2, summary.latitude_deg,
        summary.alpha_geo, summary.lai_broadleaf_effective,
        summary.lai_conifer_effective, summary.total_fuel_tons);
    js << buf;
    if (!js) {
      throw IoFailure("write failed: " + (out_dir / "summary.json").string());
    }
  }
}

}  // namespace canopy
