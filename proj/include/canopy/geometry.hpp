#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cstdint>
#include <utility>
#include <vector>

namespace canopy {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

/// Unit quaternion, world-from-camera convention, (w, x, y, z).
struct QuatRotation {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

  double norm() const;
  /// Rescales to unit norm. Throws MalformedRow if the norm is ~0.
  void normalize();
  Eigen::Quaterniond eigen() const { return {w, x, y, z}; }
  static QuatRotation from_eigen(const Eigen::Quaterniond& q) {
    return {q.w(), q.x(), q.y(), q.z()};
  }
};

struct Pose {
  std::int64_t frame_id = 0;
  Vec3 position = Vec3::Zero();
  QuatRotation orientation;
};

/// Ordered camera poses, strictly increasing frame_id.
struct Trajectory {
  std::vector<Pose> poses;

  std::vector<Vec3> positions() const;
  Vec3 position_centroid() const;
};

struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Rgb> colors;  // empty, or same length as points

  bool has_colors() const { return !colors.empty(); }
  std::size_t size() const { return points.size(); }
};

/// Similarity transform p -> scale * rotation * p + translation.
struct Sim3Transform {
  double scale = 1.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return scale * (rotation * p) + translation; }
  Sim3Transform inverse() const;
};

struct AlignmentReport {
  Sim3Transform transform;
  double rmse_m = 0.0;
  int n_points = 0;
};

/// Closed-form least-squares similarity estimate such that
/// target[i] ~ s * R * source[i] + t. Throws LengthMismatch when the lists
/// differ and DegenerateGeometry when n < 3 or the source points are
/// collinear.
AlignmentReport umeyama_align(const std::vector<Vec3>& source,
                              const std::vector<Vec3>& target);

PointCloud apply_sim3(const PointCloud& cloud, const Sim3Transform& transform);

struct LevelResult {
  PointCloud cloud;
  Mat3 rotation;
};

/// Rotates the cloud so the direction of least point variance becomes +Z,
/// with the sign chosen so the camera centroid ends up above the cloud
/// centroid. The rotation is the minimal one (no in-plane spin), so an
/// already-level cloud maps to itself.
LevelResult pca_level(const PointCloud& cloud, const Vec3& camera_centroid);

/// Position pairs matched by frame_id; frames present in only one
/// trajectory are dropped.
std::pair<std::vector<Vec3>, std::vector<Vec3>> matched_positions(
    const Trajectory& source, const Trajectory& target);

}  // namespace canopy
