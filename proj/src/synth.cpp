#include "canopy/synth.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "canopy/errors.hpp"

namespace canopy {

double SplitMix64::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  // Box-Muller; u1 nudged away from 0 to keep log finite.
  const double u1 = std::max(uniform(), 0x1.0p-53);
  const double u2 = uniform();
  const double mag = std::sqrt(-2.0 * std::log(u1));
  spare_ = mag * std::sin(2.0 * M_PI * u2);
  have_spare_ = true;
  return mag * std::cos(2.0 * M_PI * u2);
}

double SyntheticTree::surface_z(double d) const {
  if (d > crown_radius_m) return 0.0;
  if (shape == CrownShape::Cone) {
    return height_m * (1.0 - d / crown_radius_m);
  }
  const double rv = std::min(crown_radius_m, 0.5 * height_m);
  const double u = d / crown_radius_m;
  return (height_m - rv) + rv * std::sqrt(std::max(0.0, 1.0 - u * u));
}

double SyntheticTree::disc_area_m2() const {
  return M_PI * crown_radius_m * crown_radius_m;
}

double SyntheticStand::analytic_footprint_m2() const {
  double sum = 0.0;
  for (const auto& t : trees) sum += t.disc_area_m2();
  return sum;
}

SyntheticStand generate_stand(int n_trees, double extent_x_m,
                              double extent_y_m, double radius_min_m,
                              double radius_max_m, CrownShape shape,
                              double min_spacing_factor, std::uint64_t seed) {
  if (n_trees < 1 || radius_min_m <= 0.0 || radius_max_m < radius_min_m) {
    throw TypeMismatch("generate_stand: invalid parameters");
  }
  SyntheticStand stand;
  stand.extent_x_m = extent_x_m;
  stand.extent_y_m = extent_y_m;
  stand.seed = seed;

  SplitMix64 rng(seed);
  auto make_tree = [&](double cx, double cy) {
    SyntheticTree tree;
    tree.center_x_m = cx;
    tree.center_y_m = cy;
    tree.crown_radius_m =
        radius_min_m + (radius_max_m - radius_min_m) * rng.uniform();
    tree.height_m = 10.0 + 2.0 * rng.uniform();
    tree.shape = shape;
    return tree;
  };

  if (n_trees == 1) {
    stand.trees.push_back(make_tree(0.5 * extent_x_m, 0.5 * extent_y_m));
    return stand;
  }

  const long max_attempts = static_cast<long>(n_trees) * 1000;
  long attempts = 0;
  while (static_cast<int>(stand.trees.size()) < n_trees) {
    if (++attempts > max_attempts) {
      throw PackingInfeasible(
          "generate_stand: could not place " + std::to_string(n_trees) +
          " trees in " + std::to_string(extent_x_m) + " x " +
          std::to_string(extent_y_m) + " m after " +
          std::to_string(max_attempts) + " attempts");
    }
    const double margin = radius_max_m;
    const double cx = margin + (extent_x_m - 2.0 * margin) * rng.uniform();
    const double cy = margin + (extent_y_m - 2.0 * margin) * rng.uniform();
    SyntheticTree cand = make_tree(cx, cy);
    bool ok = true;
    for (const auto& t : stand.trees) {
      const double dx = cand.center_x_m - t.center_x_m;
      const double dy = cand.center_y_m - t.center_y_m;
      const double min_d =
          min_spacing_factor * (cand.crown_radius_m + t.crown_radius_m);
      if (dx * dx + dy * dy < min_d * min_d) {
        ok = false;
        break;
      }
    }
    if (ok) stand.trees.push_back(cand);
  }
  return stand;
}

PointCloud sample_cloud(const SyntheticStand& stand, double points_per_m2,
                        double noise_sigma_m, std::uint64_t seed) {
  if (!(points_per_m2 > 0.0)) {
    throw TypeMismatch("sample_cloud: density must be positive");
  }
  const double spacing = 1.0 / std::sqrt(points_per_m2);
  const long nx = std::lround(stand.extent_x_m / spacing);
  const long ny = std::lround(stand.extent_y_m / spacing);
  if (nx < 1 || ny < 1) {
    throw TypeMismatch("sample_cloud: extent smaller than sample spacing");
  }

  SplitMix64 rng(seed);
  PointCloud cloud;
  cloud.points.reserve(static_cast<std::size_t>(nx) * ny);
  for (long iy = 0; iy < ny; ++iy) {
    const double y = static_cast<double>(iy) * spacing;
    for (long ix = 0; ix < nx; ++ix) {
      const double x = static_cast<double>(ix) * spacing;
      double z = 0.0;  // ground plane
      for (const auto& tree : stand.trees) {
        const double dx = x - tree.center_x_m, dy = y - tree.center_y_m;
        const double d = std::sqrt(dx * dx + dy * dy);
        if (d <= tree.crown_radius_m) {
          z = std::max(z, tree.surface_z(d));
        }
      }
      Vec3 p(x, y, z);
      if (noise_sigma_m > 0.0) {
        p += noise_sigma_m * Vec3(rng.normal(), rng.normal(), rng.normal());
      }
      cloud.points.push_back(p);
    }
  }
  return cloud;
}

Trajectory synth_trajectory(const SyntheticStand& stand, double orbit_radius_m,
                            double altitude_m, int n_frames) {
  if (n_frames < 1) {
    throw TypeMismatch("synth_trajectory: need at least one frame");
  }
  const Vec3 center(0.5 * stand.extent_x_m, 0.5 * stand.extent_y_m, 0.0);
  Trajectory traj;
  for (int i = 0; i < n_frames; ++i) {
    const double angle = 2.0 * M_PI * static_cast<double>(i) / n_frames;
    Pose pose;
    pose.frame_id = i;
    pose.position = center + Vec3(orbit_radius_m * std::cos(angle),
                                  orbit_radius_m * std::sin(angle),
                                  altitude_m);
    // Camera +Z looks at the stand center.
    const Vec3 forward = (center - pose.position).normalized();
    Vec3 right = forward.cross(Vec3::UnitZ());
    if (right.norm() < 1e-9) right = Vec3::UnitX();
    right.normalize();
    const Vec3 down = forward.cross(right);
    Mat3 rot;
    rot.col(0) = right;
    rot.col(1) = down;
    rot.col(2) = forward;
    pose.orientation = QuatRotation::from_eigen(Eigen::Quaterniond(rot));
    traj.poses.push_back(pose);
  }
  return traj;
}

Trajectory perturb_sim3(const Trajectory& trajectory,
                        const Sim3Transform& transform) {
  Trajectory out = trajectory;
  const Eigen::Quaterniond q_rot(transform.rotation);
  for (Pose& pose : out.poses) {
    pose.position = transform.apply(pose.position);
    pose.orientation =
        QuatRotation::from_eigen(q_rot * pose.orientation.eigen());
  }
  return out;
}

void write_truth_json(const SyntheticStand& stand,
                      const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoFailure("cannot open for writing: " + path.string());
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "{\n  \"seed\": %llu,\n  \"extent_m\": [%.6f, %.6f],\n"
                "  \"footprint_m2\": %.6f,\n  \"trees\": [\n",
                static_cast<unsigned long long>(stand.seed), stand.extent_x_m,
                stand.extent_y_m, stand.analytic_footprint_m2());
  out << buf;
  for (std::size_t i = 0; i < stand.trees.size(); ++i) {
    const auto& t = stand.trees[i];
    std::snprintf(buf, sizeof(buf),
                  "    {\"center_m\": [%.6f, %.6f], \"crown_radius_m\": %.6f, "
                  "\"height_m\": %.6f, \"species\": \"%s\", "
                  "\"area_m2\": %.6f}%s\n",
                  t.center_x_m, t.center_y_m, t.crown_radius_m, t.height_m,
                  t.shape == CrownShape::Cone ? "conifer" : "broadleaf",
                  t.disc_area_m2(), i + 1 < stand.trees.size() ? "," : "");
    out << buf;
  }
  out << "  ]\n}\n";
  if (!out) throw IoFailure("write failed: " + path.string());
}

}  // namespace canopy
