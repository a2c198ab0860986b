#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "canopy/config.hpp"
#include "canopy/errors.hpp"
#include "canopy/io.hpp"
#include "canopy/synth.hpp"

using namespace canopy;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "canopy_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace

TEST_CASE("ascii PLY with one vertex") {
  const auto path = temp_file("one.ply");
  write_text(path,
             "ply\nformat ascii 1.0\nelement vertex 1\n"
             "property float x\nproperty float y\nproperty float z\n"
             "end_header\n0 0 0\n");
  const PointCloud cloud = read_ply(path);
  REQUIRE(cloud.size() == 1);
  CHECK(cloud.points[0] == Vec3(0, 0, 0));
  CHECK_FALSE(cloud.has_colors());
}

TEST_CASE("PLY binary round trip within float32 quantization") {
  SplitMix64 rng(5);
  PointCloud cloud;
  for (int i = 0; i < 200; ++i) {
    cloud.points.push_back(100.0 *
                           Vec3(rng.normal(), rng.normal(), rng.normal()));
    cloud.colors.push_back({static_cast<std::uint8_t>(rng.next() & 0xff),
                            static_cast<std::uint8_t>(rng.next() & 0xff),
                            static_cast<std::uint8_t>(rng.next() & 0xff)});
  }
  const auto path = temp_file("roundtrip.ply");
  write_ply(cloud, path);
  const PointCloud back = read_ply(path);
  REQUIRE(back.size() == cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (int a = 0; a < 3; ++a) {
      CHECK(back.points[i](a) ==
            static_cast<double>(static_cast<float>(cloud.points[i](a))));
    }
  }
  CHECK(back.colors == cloud.colors);  // byte-exact
}

TEST_CASE("PLY skips unknown properties") {
  const auto path = temp_file("extra.ply");
  write_text(path,
             "ply\nformat ascii 1.0\nelement vertex 2\n"
             "property float x\nproperty float nx\nproperty float y\n"
             "property float z\nend_header\n"
             "1 9 2 3\n4 9 5 6\n");
  const PointCloud cloud = read_ply(path);
  REQUIRE(cloud.size() == 2);
  CHECK(cloud.points[1] == Vec3(4, 5, 6));
}

TEST_CASE("PLY error paths") {
  SUBCASE("truncated ascii body") {
    const auto path = temp_file("trunc.ply");
    write_text(path,
               "ply\nformat ascii 1.0\nelement vertex 10\n"
               "property float x\nproperty float y\nproperty float z\n"
               "end_header\n0 0 0\n1 1 1\n");
    CHECK_THROWS_AS((void)read_ply(path), TruncatedBody);
  }
  SUBCASE("truncated binary body") {
    PointCloud cloud;
    cloud.points = {{1, 2, 3}, {4, 5, 6}, {7, 8, 9}};
    const auto path = temp_file("trunc_bin.ply");
    write_ply(cloud, path);
    fs::resize_file(path, fs::file_size(path) - 5);
    CHECK_THROWS_AS((void)read_ply(path), TruncatedBody);
  }
  SUBCASE("big endian rejected") {
    const auto path = temp_file("be.ply");
    write_text(path,
               "ply\nformat binary_big_endian 1.0\nelement vertex 0\n"
               "property float x\nproperty float y\nproperty float z\n"
               "end_header\n");
    CHECK_THROWS_AS((void)read_ply(path), MalformedHeader);
  }
  SUBCASE("missing xyz") {
    const auto path = temp_file("noz.ply");
    write_text(path,
               "ply\nformat ascii 1.0\nelement vertex 1\n"
               "property float x\nproperty float y\nend_header\n0 0\n");
    CHECK_THROWS_AS((void)read_ply(path), MalformedHeader);
  }
  SUBCASE("empty cloud refused on write") {
    CHECK_THROWS_AS(write_ply(PointCloud{}, temp_file("empty.ply")),
                    EmptyCloud);
  }
}

TEST_CASE("trajectory CSV basics") {
  const auto path = temp_file("traj.csv");
  write_text(path,
             "frame_id,x,y,z,qw,qx,qy,qz\n"
             "1,4,5,6,1,0,0,0\n"
             "0,1,2,3,2,0,0,0\n");
  const Trajectory traj = read_trajectory_csv(path);
  REQUIRE(traj.poses.size() == 2);
  CHECK(traj.poses[0].frame_id == 0);  // sorted ascending
  CHECK(traj.poses[1].frame_id == 1);
  // (2,0,0,0) normalizes to (1,0,0,0)
  CHECK(traj.poses[0].orientation.w == doctest::Approx(1.0));
  CHECK(traj.poses[0].orientation.norm() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("trajectory CSV error paths") {
  SUBCASE("duplicate frame id") {
    const auto path = temp_file("dup.csv");
    write_text(path,
               "frame_id,x,y,z,qw,qx,qy,qz\n"
               "5,0,0,0,1,0,0,0\n5,1,1,1,1,0,0,0\n");
    CHECK_THROWS_AS((void)read_trajectory_csv(path), DuplicateFrame);
  }
  SUBCASE("bad header") {
    const auto path = temp_file("hdr.csv");
    write_text(path, "frame,x,y,z\n0,0,0,0\n");
    CHECK_THROWS_AS((void)read_trajectory_csv(path), MalformedRow);
  }
  SUBCASE("short row carries its line number") {
    const auto path = temp_file("short.csv");
    write_text(path, "frame_id,x,y,z,qw,qx,qy,qz\n0,1,2\n");
    try {
      (void)read_trajectory_csv(path);
      FAIL("expected MalformedRow");
    } catch (const MalformedRow& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
  SUBCASE("non-numeric field") {
    const auto path = temp_file("alpha.csv");
    write_text(path, "frame_id,x,y,z,qw,qx,qy,qz\n0,a,0,0,1,0,0,0\n");
    CHECK_THROWS_AS((void)read_trajectory_csv(path), MalformedRow);
  }
}

TEST_CASE("trajectory CSV write/read round trip") {
  Trajectory traj;
  SplitMix64 rng(9);
  for (int i = 0; i < 20; ++i) {
    Pose p;
    p.frame_id = i;
    p.position = 50.0 * Vec3(rng.normal(), rng.normal(), rng.normal());
    p.orientation = {rng.normal(), rng.normal(), rng.normal(), rng.normal()};
    p.orientation.normalize();
    traj.poses.push_back(p);
  }
  const auto path = temp_file("rt.csv");
  write_trajectory_csv(traj, path);
  const Trajectory back = read_trajectory_csv(path);
  REQUIRE(back.poses.size() == traj.poses.size());
  for (std::size_t i = 0; i < traj.poses.size(); ++i) {
    CHECK((back.poses[i].position - traj.poses[i].position).norm() < 1e-12);
    CHECK(back.poses[i].orientation.w ==
          doctest::Approx(traj.poses[i].orientation.w).epsilon(1e-12));
  }
}

TEST_CASE("geodetic trajectory conversion") {
  SUBCASE("anchor frame maps to the origin") {
    const auto path = temp_file("geo1.json");
    write_text(path,
               R"({"cameraFrames": [{"position": {"latitude": 45.0,
                  "longitude": -75.0, "altitude": 100.0}}]})");
    const Trajectory traj = read_trajectory_geodetic(path);
    REQUIRE(traj.poses.size() == 1);
    CHECK(traj.poses[0].position.norm() < 1e-9);
    CHECK(traj.poses[0].orientation.w == 1.0);  // missing rotation -> identity
  }

  SUBCASE("pure altitude displacement is pure up") {
    const auto path = temp_file("geo2.json");
    write_text(path,
               R"({"cameraFrames": [
                 {"position": {"latitude": 45.0, "longitude": -75.0,
                               "altitude": 100.0}},
                 {"position": {"latitude": 45.0, "longitude": -75.0,
                               "altitude": 200.0}}]})");
    const Trajectory traj = read_trajectory_geodetic(path);
    REQUIRE(traj.poses.size() == 2);
    CHECK((traj.poses[1].position - Vec3(0, 0, 100)).norm() < 1e-6);
  }

  SUBCASE("0.001 degree north at the equator") {
    const auto path = temp_file("geo3.json");
    write_text(path,
               R"({"cameraFrames": [
                 {"position": {"latitude": 0.0, "longitude": 10.0,
                               "altitude": 0.0}},
                 {"position": {"latitude": 0.001, "longitude": 10.0,
                               "altitude": 0.0}}]})");
    const Trajectory traj = read_trajectory_geodetic(path);
    // Meridian arc at the equator: M = a(1-e^2) = 6335439.327 m per radian,
    // so 0.001 deg = 110.5743 m.
    CHECK(std::abs(traj.poses[1].position.y() - 110.5743) < 0.1);
    CHECK(std::abs(traj.poses[1].position.x()) < 1e-6);
  }

  SUBCASE("local isometry for a 1 m altitude step") {
    const auto path = temp_file("geo4.json");
    write_text(path,
               R"({"cameraFrames": [
                 {"position": {"latitude": 60.0, "longitude": 25.0,
                               "altitude": 10.0}},
                 {"position": {"latitude": 60.0, "longitude": 25.0,
                               "altitude": 11.0}}]})");
    const Trajectory traj = read_trajectory_geodetic(path);
    CHECK(std::abs(traj.poses[1].position.norm() - 1.0) < 1e-6);
  }

  SUBCASE("schema violations name the missing field") {
    const auto path = temp_file("geo5.json");
    write_text(path,
               R"({"cameraFrames": [{"position": {"latitude": 1.0,
                  "longitude": 2.0}}]})");
    try {
      (void)read_trajectory_geodetic(path);
      FAIL("expected SchemaViolation");
    } catch (const SchemaViolation& e) {
      CHECK(std::string(e.what()).find("altitude") != std::string::npos);
    }
  }

  SUBCASE("empty frame list") {
    const auto path = temp_file("geo6.json");
    write_text(path, R"({"cameraFrames": []})");
    CHECK_THROWS_AS((void)read_trajectory_geodetic(path), EmptyFrames);
  }

  SUBCASE("garbage JSON does not crash") {
    const auto path = temp_file("geo7.json");
    write_text(path, "{\"cameraFrames\": [{");
    CHECK_THROWS_AS((void)read_trajectory_geodetic(path), SchemaViolation);
  }
}

TEST_CASE("config defaults and parsing") {
  SUBCASE("empty file keeps every default") {
    const auto path = temp_file("empty.cfg");
    write_text(path, "");
    const PipelineConfig cfg = read_config(path);
    CHECK(cfg.cell_size_m == 0.5);
    CHECK(cfg.h_min == 0.15);
    CHECK(cfg.core_alpha == 0.5);
    CHECK(cfg.min_peak_distance_m == 2.0);
    CHECK(cfg.sigma_conifer_threshold == 0.2);
    CHECK(cfg.lai_broadleaf == 5.5);
    CHECK(cfg.lai_conifer == 3.0);
    CHECK(cfg.rho_broadleaf == 3.8);
    CHECK(cfg.rho_conifer == 2.5);
    CHECK(cfg.ground_percentile == 2.0);
    CHECK(cfg.top_percentile == 98.0);
  }
  SUBCASE("assignments and comments") {
    const auto path = temp_file("set.cfg");
    write_text(path, "h_min = 0.15  # relative threshold\ncell_size_m = 0.25\n");
    const PipelineConfig cfg = read_config(path);
    CHECK(cfg.h_min == 0.15);
    CHECK(cfg.cell_size_m == 0.25);
  }
  SUBCASE("out-of-range value names the key") {
    const auto path = temp_file("bad.cfg");
    write_text(path, "h_min = 1.5\n");
    try {
      (void)read_config(path);
      FAIL("expected TypeMismatch");
    } catch (const TypeMismatch& e) {
      CHECK(std::string(e.what()).find("h_min") != std::string::npos);
    }
  }
  SUBCASE("unknown key warns but parses") {
    const auto path = temp_file("unknown.cfg");
    write_text(path, "no_such_key = 3\n");
    CHECK_NOTHROW((void)read_config(path));
  }
  SUBCASE("non-numeric value") {
    const auto path = temp_file("nan.cfg");
    write_text(path, "cell_size_m = big\n");
    CHECK_THROWS_AS((void)read_config(path), TypeMismatch);
  }
}
