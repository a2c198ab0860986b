#pragma once

#include <filesystem>

#include "canopy/geometry.hpp"

namespace canopy {

struct GeodeticPosition {
  double latitude_deg = 0.0;   // [-90, 90]
  double longitude_deg = 0.0;  // [-180, 180]
  double altitude_m = 0.0;     // height above the WGS84 ellipsoid
};

/// WGS84 geodetic -> Earth-centered Earth-fixed, meters.
Vec3 geodetic_to_ecef(const GeodeticPosition& g);

/// ECEF -> local East-North-Up tangent frame anchored at `anchor`.
Vec3 ecef_to_enu(const Vec3& ecef, const GeodeticPosition& anchor);

/// Reads ascii or binary_little_endian PLY 1.0 with float/double x y z and
/// optional uchar red/green/blue. Unknown vertex properties are skipped.
PointCloud read_ply(const std::filesystem::path& path);

/// Writes binary_little_endian PLY, float32 coordinates, uchar rgb when
/// colors are present.
void write_ply(const PointCloud& cloud, const std::filesystem::path& path);

/// CSV with header `frame_id,x,y,z,qw,qx,qy,qz`; quaternions normalized on
/// ingest, poses sorted by frame_id.
Trajectory read_trajectory_csv(const std::filesystem::path& path);

void write_trajectory_csv(const Trajectory& traj,
                          const std::filesystem::path& path);

/// Geodetic camera export: {"cameraFrames": [{"position": {"latitude",
/// "longitude", "altitude"}, "rotation": {"x","y","z"}}, ...]}. Positions are
/// converted to a local ENU frame anchored at the first frame; frame ids are
/// array indices; a missing rotation yields the identity quaternion.
Trajectory read_trajectory_geodetic(const std::filesystem::path& path);

/// Dispatches on extension: ".json" -> geodetic, anything else -> CSV.
Trajectory read_trajectory_any(const std::filesystem::path& path);

}  // namespace canopy
