#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "canopy/geometry.hpp"

namespace canopy {

/// Deterministic 64-bit generator (splitmix64). The algorithm and constants
/// are part of the contract so golden files survive reimplementation.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1), 53-bit mantissa.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; consumes two uniforms per pair.
  double normal();

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

enum class CrownShape { Cone, Hemisphere };

/// Cone crowns reach the ground (conifer skirt); hemisphere crowns are domes
/// whose top sits at height_m with vertical semi-axis min(radius, height/2),
/// i.e. elevated above an implicit trunk.
struct SyntheticTree {
  double center_x_m = 0.0;
  double center_y_m = 0.0;
  double crown_radius_m = 0.0;
  double height_m = 0.0;
  CrownShape shape = CrownShape::Cone;

  /// Crown surface height at planar distance d from the center; 0 outside.
  double surface_z(double d) const;
  double disc_area_m2() const;
};

struct SyntheticStand {
  std::vector<SyntheticTree> trees;
  double extent_x_m = 0.0;
  double extent_y_m = 0.0;
  std::uint64_t seed = 0;

  double analytic_footprint_m2() const;  // sum of disc areas (disjoint crowns)
};

/// Rejection-samples tree centers with pairwise center distance >=
/// min_spacing_factor * (r_i + r_j). Heights are uniform in [10, 12] m.
/// n_trees == 1 places the tree at the stand center. Deterministic per seed;
/// throws PackingInfeasible after a bounded number of attempts.
SyntheticStand generate_stand(int n_trees, double extent_x_m,
                              double extent_y_m, double radius_min_m,
                              double radius_max_m, CrownShape shape,
                              double min_spacing_factor, std::uint64_t seed);

/// Samples crown surfaces and the ground plane on a regular lattice of
/// spacing 1/sqrt(points_per_m2) anchored at (0,0), then adds isotropic
/// Gaussian noise of the given sigma. Deterministic per seed.
PointCloud sample_cloud(const SyntheticStand& stand, double points_per_m2,
                        double noise_sigma_m, std::uint64_t seed);

/// Circular orbit centered on the stand, cameras looking at the center,
/// n_frames equally spaced, frame ids 0..n-1.
Trajectory synth_trajectory(const SyntheticStand& stand, double orbit_radius_m,
                            double altitude_m, int n_frames);

/// Applies the similarity to every pose position and rotates orientations by
/// its rotation part; inverse problem input for alignment tests.
Trajectory perturb_sim3(const Trajectory& trajectory,
                        const Sim3Transform& transform);

/// Ground-truth record for the stand: trees with centers, radii, species and
/// analytic disc areas.
void write_truth_json(const SyntheticStand& stand,
                      const std::filesystem::path& path);

}  // namespace canopy
