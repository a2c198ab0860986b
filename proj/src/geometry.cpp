#include "canopy/geometry.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>

#include "canopy/errors.hpp"

namespace canopy {

double QuatRotation::norm() const {
  return std::sqrt(w * w + x * x + y * y + z * z);
}

void QuatRotation::normalize() {
  double n = norm();
  if (n < 1e-12) {
    throw MalformedRow("quaternion has zero norm");
  }
  w /= n;
  x /= n;
  y /= n;
  z /= n;
}

std::vector<Vec3> Trajectory::positions() const {
  std::vector<Vec3> out;
  out.reserve(poses.size());
  for (const auto& p : poses) out.push_back(p.position);
  return out;
}

Vec3 Trajectory::position_centroid() const {
  Vec3 sum = Vec3::Zero();
  for (const auto& p : poses) sum += p.position;
  return poses.empty() ? sum : Vec3(sum / static_cast<double>(poses.size()));
}

Sim3Transform Sim3Transform::inverse() const {
  Sim3Transform inv;
  inv.scale = 1.0 / scale;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.scale) * (inv.rotation * translation);
  return inv;
}

AlignmentReport umeyama_align(const std::vector<Vec3>& source,
                              const std::vector<Vec3>& target) {
  if (source.size() != target.size()) {
    throw LengthMismatch("source and target point lists differ in length");
  }
  const std::size_t n = source.size();
  if (n < 3) {
    throw DegenerateGeometry("fewer than 3 correspondences");
  }

  Vec3 mu_x = Vec3::Zero(), mu_y = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    mu_x += source[i];
    mu_y += target[i];
  }
  mu_x /= static_cast<double>(n);
  mu_y /= static_cast<double>(n);

  Mat3 sigma = Mat3::Zero();
  double var_x = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 dx = source[i] - mu_x;
    sigma += (target[i] - mu_y) * dx.transpose();
    var_x += dx.squaredNorm();
  }
  sigma /= static_cast<double>(n);
  var_x /= static_cast<double>(n);

  if (var_x < 1e-300) {
    throw DegenerateGeometry("source points are coincident");
  }

  Eigen::JacobiSVD<Mat3> svd(sigma, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 d = svd.singularValues();
  // Collinear source (rank < 2) leaves the rotation under-constrained.
  if (d(1) <= 1e-12 * d(0)) {
    throw DegenerateGeometry("covariance rank < 2 (collinear points)");
  }

  Mat3 s_fix = Mat3::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) {
    s_fix(2, 2) = -1.0;
  }

  AlignmentReport report;
  report.transform.rotation =
      svd.matrixU() * s_fix * svd.matrixV().transpose();
  report.transform.scale = (d.asDiagonal() * s_fix).trace() / var_x;
  report.transform.translation =
      mu_y - report.transform.scale * (report.transform.rotation * mu_x);
  report.n_points = static_cast<int>(n);

  double sq_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sq_sum += (target[i] - report.transform.apply(source[i])).squaredNorm();
  }
  report.rmse_m = std::sqrt(sq_sum / static_cast<double>(n));
  return report;
}

PointCloud apply_sim3(const PointCloud& cloud, const Sim3Transform& transform) {
  PointCloud out;
  out.points.reserve(cloud.points.size());
  for (const Vec3& p : cloud.points) {
    out.points.push_back(transform.apply(p));
  }
  out.colors = cloud.colors;
  return out;
}

LevelResult pca_level(const PointCloud& cloud, const Vec3& camera_centroid) {
  const std::size_t n = cloud.points.size();
  if (n < 3) {
    throw DegenerateGeometry("pca_level needs at least 3 points");
  }

  Vec3 centroid = Vec3::Zero();
  for (const Vec3& p : cloud.points) centroid += p;
  centroid /= static_cast<double>(n);

  Mat3 cov = Mat3::Zero();
  for (const Vec3& p : cloud.points) {
    const Vec3 d = p - centroid;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  const Vec3 evals = eig.eigenvalues();  // ascending
  if (evals(2) <= 0.0 || evals(1) <= 1e-12 * evals(2)) {
    throw DegenerateGeometry("rank-deficient cloud (collinear points)");
  }

  Vec3 up = eig.eigenvectors().col(0);  // least-variance direction
  if ((camera_centroid - centroid).dot(up) < 0.0) {
    up = -up;  // cameras fly above the forest
  }

  // Minimal rotation taking the up axis to +Z; an already-level cloud maps
  // to the identity.
  const Mat3 rotation =
      Eigen::Quaterniond::FromTwoVectors(up, Vec3::UnitZ()).toRotationMatrix();

  LevelResult result;
  result.rotation = rotation;
  result.cloud.points.reserve(n);
  for (const Vec3& p : cloud.points) {
    result.cloud.points.push_back(rotation * p);
  }
  result.cloud.colors = cloud.colors;
  return result;
}

std::pair<std::vector<Vec3>, std::vector<Vec3>> matched_positions(
    const Trajectory& source, const Trajectory& target) {
  std::vector<Vec3> src, tgt;
  std::size_t i = 0, j = 0;
  while (i < source.poses.size() && j < target.poses.size()) {
    const auto a = source.poses[i].frame_id;
    const auto b = target.poses[j].frame_id;
    if (a == b) {
      src.push_back(source.poses[i].position);
      tgt.push_back(target.poses[j].position);
      ++i;
      ++j;
    } else if (a < b) {
      ++i;
    } else {
      ++j;
    }
  }
  return {std::move(src), std::move(tgt)};
}

}  // namespace canopy
