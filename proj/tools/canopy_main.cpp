#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "canopy/config.hpp"
#include "canopy/errors.hpp"
#include "canopy/geometry.hpp"
#include "canopy/inventory.hpp"
#include "canopy/io.hpp"
#include "canopy/manifest.hpp"
#include "canopy/pipeline.hpp"
#include "canopy/raster.hpp"
#include "canopy/segmentation.hpp"
#include "canopy/synth.hpp"

namespace fs = std::filesystem;
using namespace canopy;

namespace {

struct StageClock {
  std::vector<StageTiming>* timings;
  std::string name;
  std::chrono::steady_clock::time_point start =
      std::chrono::steady_clock::now();

  ~StageClock() {
    const auto end = std::chrono::steady_clock::now();
    timings->push_back(
        {name, std::chrono::duration<double, std::milli>(end - start).count()});
  }
};

int parse_thread_cap() {
  // Caps internal parallelism; 0 = auto. All current stages run
  // sequentially, so outputs are identical for any value.
  const char* env = std::getenv("CANOPY_THREADS");
  if (!env || !*env) return 0;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 0) {
    std::cerr << "warning: ignoring invalid CANOPY_THREADS='" << env << "'\n";
    return 0;
  }
  return static_cast<int>(v);
}

PipelineConfig load_config(const std::string& config_path,
                           const std::vector<std::string>& overrides) {
  PipelineConfig cfg;
  if (!config_path.empty()) {
    cfg = read_config(config_path);
  }
  for (const std::string& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw TypeMismatch("--set expects key=value, got '" + kv + "'");
    }
    apply_config_key(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

void write_align_report(const AlignmentReport& report, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoFailure("cannot open for writing: " + path.string());
  const Eigen::Quaterniond q(report.transform.rotation);
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "{\n  \"scale\": %.17g,\n"
                "  \"rotation_quat_wxyz\": [%.17g, %.17g, %.17g, %.17g],\n"
                "  \"translation_m\": [%.17g, %.17g, %.17g],\n"
                "  \"rmse_m\": %.17g,\n  \"n_points\": %d\n}\n",
                report.transform.scale, q.w(), q.x(), q.y(), q.z(),
                report.transform.translation.x(),
                report.transform.translation.y(),
                report.transform.translation.z(), report.rmse_m,
                report.n_points);
  out << buf;
  if (!out) throw IoFailure("write failed: " + path.string());
}

AlignmentReport align_cloud(const fs::path& recon_path, const fs::path& gt_path,
                            const fs::path& cloud_path, const fs::path& out_ply,
                            const fs::path& report_path, Trajectory* gt_out) {
  const Trajectory recon = read_trajectory_csv(recon_path);
  const Trajectory gt = read_trajectory_any(gt_path);
  auto [src, tgt] = matched_positions(recon, gt);
  if (src.size() < 3) {
    throw DegenerateGeometry("fewer than 3 correspondences between " +
                             recon_path.string() + " and " + gt_path.string());
  }
  const PointCloud cloud = read_ply(cloud_path);
  const AlignmentReport report = umeyama_align(src, tgt);
  write_ply(apply_sim3(cloud, report.transform), out_ply);
  write_align_report(report, report_path);
  if (gt_out) *gt_out = gt;
  return report;
}

void emit_raster_stage(const RasterStage& stage, const fs::path& dir) {
  write_bevr1(stage.height, dir / "height.bevr1");
  write_bevr1(stage.density, dir / "density.bevr1");
  write_mask1(stage.canopy, dir / "canopy.mask1");
  write_pgm_preview(stage.normalized.raster, dir / "height_preview.pgm");
}

RasterStage load_raster_stage(const fs::path& dir,
                              const PipelineConfig& config) {
  return raster_stage_from_files(read_bevr1(dir / "height.bevr1"),
                                 read_bevr1(dir / "density.bevr1"),
                                 read_mask1(dir / "canopy.mask1"), config);
}

SegmentStage segment_checked(const RasterStage& raster,
                             const PipelineConfig& config) {
  if (raster.canopy.count() == 0) {
    throw DegenerateError("segment: no canopy cells above h_min");
  }
  return run_segment_stage(raster, config);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Forest inventory pipeline: metric-scale recovery, BEV "
               "rasterization, tree segmentation and fuel-load estimation"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  (void)parse_thread_cap();

  std::string recon_path, gt_path, cloud_path, out_path, report_path;
  std::string config_path, out_dir;
  std::vector<std::string> overrides;
  bool json_out = false;

  auto add_config_opts = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "pipeline config file");
    cmd->add_option("--set", overrides,
                    "config override key=value (wins over --config)");
  };

  CLI::App* cmd_align = app.add_subcommand(
      "align", "Recover metric scale by trajectory alignment");
  cmd_align->add_option("--recon", recon_path, "reconstructed trajectory CSV")
      ->required();
  cmd_align->add_option("--gt", gt_path, "ground-truth trajectory (.csv|.json)")
      ->required();
  cmd_align->add_option("--cloud", cloud_path, "input point cloud PLY")
      ->required();
  cmd_align->add_option("--out", out_path, "metric point cloud PLY")
      ->required();
  cmd_align->add_option("--report", report_path, "alignment report JSON")
      ->required();

  CLI::App* cmd_raster = app.add_subcommand(
      "rasterize", "Level a metric cloud and build BEV rasters");
  cmd_raster->add_option("--cloud", cloud_path, "metric point cloud PLY")
      ->required();
  cmd_raster->add_option("--gt", gt_path, "camera trajectory (.csv|.json)")
      ->required();
  cmd_raster->add_option("--out-dir", out_dir, "output directory")->required();
  add_config_opts(cmd_raster);

  CLI::App* cmd_segment =
      app.add_subcommand("segment", "Delineate individual trees");
  cmd_segment->add_option("--dir", out_dir, "directory with raster stage files")
      ->required();
  add_config_opts(cmd_segment);

  CLI::App* cmd_inventory =
      app.add_subcommand("inventory", "Species, LAI and fuel-load reports");
  cmd_inventory
      ->add_option("--dir", out_dir, "directory with raster + label files")
      ->required();
  add_config_opts(cmd_inventory);

  CLI::App* cmd_run = app.add_subcommand("run", "Full pipeline");
  cmd_run->add_option("--cloud", cloud_path, "raw point cloud PLY")->required();
  cmd_run->add_option("--recon", recon_path, "reconstructed trajectory CSV")
      ->required();
  cmd_run->add_option("--gt", gt_path, "ground-truth trajectory (.csv|.json)")
      ->required();
  cmd_run->add_option("--out-dir", out_dir, "output directory")->required();
  cmd_run->add_flag("--json", json_out, "print the stand summary to stdout");
  add_config_opts(cmd_run);

  CLI::App* cmd_synth =
      app.add_subcommand("synth", "Generate a synthetic forest stand");
  int n_trees = 10, n_frames = 36;
  double extent_x = 60.0, extent_y = 60.0, radius_min = 1.5, radius_max = 2.5;
  double spacing_factor = 1.5, density = 64.0, noise = 0.02;
  double orbit_radius = 50.0, altitude = 80.0;
  std::uint64_t seed = 1;
  std::string shape_name = "cone";
  cmd_synth->add_option("--out-dir", out_dir, "output directory")->required();
  cmd_synth->add_option("--n-trees", n_trees, "tree count");
  cmd_synth->add_option("--extent-x", extent_x, "stand width, m");
  cmd_synth->add_option("--extent-y", extent_y, "stand depth, m");
  cmd_synth->add_option("--radius-min", radius_min, "min crown radius, m");
  cmd_synth->add_option("--radius-max", radius_max, "max crown radius, m");
  cmd_synth->add_option("--shape", shape_name, "cone|hemisphere")
      ->check(CLI::IsMember({"cone", "hemisphere"}));
  cmd_synth->add_option("--spacing-factor", spacing_factor,
                        "min center distance as multiple of r_i + r_j");
  cmd_synth->add_option("--density", density, "sample density, points/m^2");
  cmd_synth->add_option("--noise", noise, "Gaussian noise sigma, m");
  cmd_synth->add_option("--seed", seed, "random seed");
  cmd_synth->add_option("--orbit-radius", orbit_radius, "camera orbit radius, m");
  cmd_synth->add_option("--altitude", altitude, "camera altitude, m");
  cmd_synth->add_option("--frames", n_frames, "camera frame count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::usage);
  }

  try {
    if (*cmd_align) {
      const AlignmentReport report = align_cloud(
          recon_path, gt_path, cloud_path, out_path, report_path, nullptr);
      std::cerr << "aligned " << report.n_points << " poses, scale "
                << report.transform.scale << ", rmse " << report.rmse_m
                << " m\n";
    } else if (*cmd_raster) {
      const PipelineConfig cfg = load_config(config_path, overrides);
      fs::create_directories(out_dir);
      const Trajectory gt = read_trajectory_any(gt_path);
      const PointCloud cloud = read_ply(cloud_path);
      const RasterStage stage =
          run_raster_stage(cloud, gt.position_centroid(), cfg);
      emit_raster_stage(stage, out_dir);
      std::cerr << "rasterized " << cloud.size() << " points onto "
                << stage.height.spec.width << "x" << stage.height.spec.height
                << " grid, footprint " << stage.footprint_m2 << " m^2\n";
    } else if (*cmd_segment) {
      const PipelineConfig cfg = load_config(config_path, overrides);
      const RasterStage raster = load_raster_stage(out_dir, cfg);
      const SegmentStage stage = segment_checked(raster, cfg);
      write_lblr1(stage.labels, fs::path(out_dir) / "labels.lblr1");
      write_label_pgm(stage.labels, fs::path(out_dir) / "labels_preview.pgm");
      std::cerr << "segmented " << stage.markers.size() << " trees\n";
    } else if (*cmd_inventory) {
      const PipelineConfig cfg = load_config(config_path, overrides);
      const RasterStage raster = load_raster_stage(out_dir, cfg);
      const LabelRaster labels = read_lblr1(fs::path(out_dir) / "labels.lblr1");
      const InventoryStage stage = run_inventory_stage(raster, labels, cfg);
      write_reports(stage.records, stage.summary, out_dir);
      std::cerr << "inventory: " << stage.summary.n_trees << " trees, "
                << stage.summary.total_fuel_tons << " t fuel\n";
    } else if (*cmd_run) {
      const PipelineConfig cfg = load_config(config_path, overrides);
      fs::create_directories(out_dir);
      const fs::path dir(out_dir);
      RunManifest manifest;
      manifest.inputs = {cloud_path, recon_path, gt_path};
      if (!config_path.empty()) manifest.inputs.push_back(config_path);
      manifest.config = cfg;

      Trajectory gt;
      {
        StageClock clock{&manifest.timings, "align"};
        align_cloud(recon_path, gt_path, cloud_path, dir / "metric.ply",
                    dir / "align.json", &gt);
      }
      RasterStage raster;
      {
        StageClock clock{&manifest.timings, "rasterize"};
        const PointCloud metric = read_ply(dir / "metric.ply");
        raster = run_raster_stage(metric, gt.position_centroid(), cfg);
        emit_raster_stage(raster, dir);
        // Continue from the persisted (float32) rasters so a monolithic run
        // and the stage-wise commands produce identical downstream outputs.
        raster = load_raster_stage(dir, cfg);
      }
      SegmentStage segment;
      {
        StageClock clock{&manifest.timings, "segment"};
        segment = segment_checked(raster, cfg);
        write_lblr1(segment.labels, dir / "labels.lblr1");
        write_label_pgm(segment.labels, dir / "labels_preview.pgm");
      }
      InventoryStage inventory;
      {
        StageClock clock{&manifest.timings, "inventory"};
        inventory = run_inventory_stage(raster, segment.labels, cfg);
        write_reports(inventory.records, inventory.summary, dir);
      }
      for (const char* name :
           {"metric.ply", "align.json", "height.bevr1", "density.bevr1",
            "canopy.mask1", "height_preview.pgm", "labels.lblr1",
            "labels_preview.pgm", "inventory.csv", "summary.json"}) {
        manifest.outputs.push_back({name, hash_file(dir / name)});
      }
      write_manifest(manifest, dir / "manifest.json");
      std::cerr << "run complete: " << inventory.summary.n_trees << " trees, "
                << inventory.summary.total_fuel_tons << " t fuel, footprint "
                << inventory.summary.footprint_m2 << " m^2\n";
      if (json_out) {
        std::ifstream summary(dir / "summary.json");
        std::cout << summary.rdbuf();
      }
    } else if (*cmd_synth) {
      fs::create_directories(out_dir);
      const fs::path dir(out_dir);
      const CrownShape shape =
          shape_name == "cone" ? CrownShape::Cone : CrownShape::Hemisphere;
      const SyntheticStand stand =
          generate_stand(n_trees, extent_x, extent_y, radius_min, radius_max,
                         shape, spacing_factor, seed);
      const PointCloud cloud = sample_cloud(stand, density, noise, seed + 1);
      const Trajectory traj =
          synth_trajectory(stand, orbit_radius, altitude, n_frames);
      write_ply(cloud, dir / "cloud.ply");
      write_trajectory_csv(traj, dir / "trajectory.csv");
      write_truth_json(stand, dir / "truth.json");
      std::cerr << "synthesized " << stand.trees.size() << " trees, "
                << cloud.size() << " points\n";
    }
  } catch (const PipelineError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::io);
  }
  return 0;
}
