#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "canopy/errors.hpp"
#include "canopy/segmentation.hpp"
#include "canopy/synth.hpp"

using namespace canopy;

namespace {

CanopyMask make_mask(int width, int height,
                     const std::vector<std::uint8_t>& cells) {
  CanopyMask m;
  m.spec = {width, height, 1.0, 0.0, 0.0};
  m.mask = cells;
  return m;
}

BevRaster make_raster(int width, int height, const std::vector<double>& vals) {
  BevRaster r;
  r.spec = {width, height, 1.0, 0.0, 0.0};
  r.values = vals;
  return r;
}

// O(n^2) all-pairs nearest-background distance; the outside of the grid is
// background at unit distance beyond the border.
BevRaster brute_force_edt(const CanopyMask& mask) {
  const int w = mask.spec.width, h = mask.spec.height;
  BevRaster out;
  out.spec = mask.spec;
  out.values.assign(mask.spec.cells(), 0.0);
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      if (!mask.at(row, col)) continue;
      double best_sq = 1e300;
      // interior background cells
      for (int r2 = 0; r2 < h; ++r2) {
        for (int c2 = 0; c2 < w; ++c2) {
          if (mask.at(r2, c2)) continue;
          const double d =
              double(row - r2) * (row - r2) + double(col - c2) * (col - c2);
          best_sq = std::min(best_sq, d);
        }
      }
      // virtual background ring outside the grid
      for (int r2 = -1; r2 <= h; ++r2) {
        for (int c2 = -1; c2 <= w; ++c2) {
          if (r2 >= 0 && r2 < h && c2 >= 0 && c2 < w) continue;
          const double d =
              double(row - r2) * (row - r2) + double(col - c2) * (col - c2);
          best_sq = std::min(best_sq, d);
        }
      }
      out.at(row, col) = std::sqrt(best_sq);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("core_stats hand example") {
  const BevRaster r = make_raster(3, 1, {0.2, 0.4, 0.6});
  const CanopyMask m = make_mask(3, 1, {1, 1, 1});
  const CoreStats s = core_stats(r, m, 0.5);
  CHECK(s.mu_h == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(s.sigma_h == doctest::Approx(0.163299316).epsilon(1e-6));
  CHECK(s.t_core == doctest::Approx(0.481649658).epsilon(1e-6));
}

TEST_CASE("core_stats edge cases") {
  const BevRaster r = make_raster(2, 1, {0.3, 0.7});
  SUBCASE("alpha 0 gives the mean") {
    const CoreStats s = core_stats(r, make_mask(2, 1, {1, 1}), 0.0);
    CHECK(s.t_core == doctest::Approx(0.5));
  }
  SUBCASE("single cell has zero sigma") {
    const CoreStats s = core_stats(r, make_mask(2, 1, {0, 1}), 0.5);
    CHECK(s.sigma_h == 0.0);
    CHECK(s.t_core == doctest::Approx(0.7));
  }
  SUBCASE("empty mask throws") {
    CHECK_THROWS_AS((void)core_stats(r, make_mask(2, 1, {0, 0}), 0.5),
                    EmptyMask);
  }
}

TEST_CASE("tree_core_mask strict threshold") {
  const BevRaster r = make_raster(3, 1, {0.4, 0.5, 0.6});
  const CanopyMask canopy = make_mask(3, 1, {1, 1, 1});
  CoreStats stats;
  stats.t_core = 0.5;
  const CanopyMask core = tree_core_mask(r, canopy, stats);
  CHECK_FALSE(core.mask[0]);
  CHECK_FALSE(core.mask[1]);  // value exactly t_core excluded
  CHECK(core.mask[2]);
}

TEST_CASE("edt trivial cases") {
  SUBCASE("all false -> zeros") {
    const BevRaster d = edt(make_mask(3, 3, std::vector<std::uint8_t>(9, 0)));
    for (double v : d.values) CHECK(v == 0.0);
  }
  SUBCASE("single true cell -> 1") {
    std::vector<std::uint8_t> cells(9, 0);
    cells[4] = 1;
    const BevRaster d = edt(make_mask(3, 3, cells));
    CHECK(d.at(1, 1) == 1.0);
  }
  SUBCASE("7x7 all true, center distance 4 to the implicit outside") {
    const BevRaster d = edt(make_mask(7, 7, std::vector<std::uint8_t>(49, 1)));
    CHECK(d.at(3, 3) == 4.0);
    CHECK(d.at(0, 0) == 1.0);
  }
}

TEST_CASE("edt matches the brute-force oracle on random grids") {
  SplitMix64 rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    const int w = 1 + static_cast<int>(rng.uniform() * 24);
    const int h = 1 + static_cast<int>(rng.uniform() * 24);
    std::vector<std::uint8_t> cells(static_cast<std::size_t>(w) * h);
    const double fill = rng.uniform();
    for (auto& c : cells) c = rng.uniform() < fill ? 1 : 0;
    const CanopyMask mask = make_mask(w, h, cells);
    const BevRaster fast = edt(mask);
    const BevRaster slow = brute_force_edt(mask);
    for (std::size_t i = 0; i < fast.values.size(); ++i) {
      REQUIRE(fast.values[i] == doctest::Approx(slow.values[i]).epsilon(1e-12));
    }
  }
}

namespace {

// Adds a filled disc of true cells.
void add_disc(CanopyMask& mask, int crow, int ccol, double radius) {
  for (int row = 0; row < mask.spec.height; ++row) {
    for (int col = 0; col < mask.spec.width; ++col) {
      const double dr = row - crow, dc = col - ccol;
      if (dr * dr + dc * dc <= radius * radius) mask.set(row, col, true);
    }
  }
}

}  // namespace

TEST_CASE("find_markers separates two distant cores") {
  CanopyMask core = make_mask(40, 20, std::vector<std::uint8_t>(800, 0));
  add_disc(core, 10, 8, 3.0);
  add_disc(core, 10, 28, 3.0);  // 20 cells apart
  const std::vector<Marker> markers = find_markers(edt(core), core, 4.0);
  REQUIRE(markers.size() == 2);
  CHECK(markers[0].label == 1);
  CHECK(markers[1].label == 2);
  CHECK(std::abs(markers[0].col - markers[1].col) == 20);
}

TEST_CASE("find_markers puts one marker at a circular core's center") {
  CanopyMask core = make_mask(21, 21, std::vector<std::uint8_t>(441, 0));
  add_disc(core, 10, 10, 6.0);
  const std::vector<Marker> markers = find_markers(edt(core), core, 3.0);
  REQUIRE(markers.size() == 1);
  CHECK(std::abs(markers[0].row - 10) <= 1);
  CHECK(std::abs(markers[0].col - 10) <= 1);
}

TEST_CASE("find_markers rejects an empty core") {
  CanopyMask core = make_mask(4, 4, std::vector<std::uint8_t>(16, 0));
  CHECK_THROWS_AS((void)find_markers(edt(core), core, 2.0), NoMarkers);
}

TEST_CASE("watershed floods a connected canopy from one marker") {
  CanopyMask canopy = make_mask(15, 15, std::vector<std::uint8_t>(225, 0));
  add_disc(canopy, 7, 7, 5.0);
  BevRaster heights = make_raster(15, 15, std::vector<double>(225, 0.5));
  const std::vector<Marker> markers = {{7, 7, 1, 1.0}};
  const LabelRaster labels = watershed(heights, canopy, markers);
  for (int row = 0; row < 15; ++row) {
    for (int col = 0; col < 15; ++col) {
      CHECK(labels.at(row, col) == (canopy.at(row, col) ? 1u : 0u));
    }
  }
}

TEST_CASE("watershed leaves markerless islands unlabeled") {
  CanopyMask canopy = make_mask(30, 12, std::vector<std::uint8_t>(360, 0));
  add_disc(canopy, 6, 6, 4.0);
  add_disc(canopy, 6, 22, 4.0);  // disconnected island
  BevRaster heights = make_raster(30, 12, std::vector<double>(360, 0.5));
  const LabelRaster labels = watershed(heights, canopy, {{6, 6, 1, 1.0}});
  CHECK(labels.at(6, 6) == 1);
  CHECK(labels.at(6, 22) == 0);
}

TEST_CASE("watershed rejects markers outside the canopy") {
  CanopyMask canopy = make_mask(5, 5, std::vector<std::uint8_t>(25, 0));
  canopy.set(2, 2, true);
  BevRaster heights = make_raster(5, 5, std::vector<double>(25, 0.5));
  CHECK_THROWS_AS((void)watershed(heights, canopy, {{0, 0, 1, 1.0}}),
                  MarkerOutsideCanopy);
}

TEST_CASE("watershed splits two symmetric crowns at the valley") {
  // Two identical Gaussian crowns; by symmetry the boundary must lie at the
  // vertical midline, within one cell.
  const int w = 41, h = 21;
  BevRaster heights = make_raster(w, h, std::vector<double>(size_t(w) * h, 0));
  const double cx1 = 10.0, cx2 = 30.0, cy = 10.0;
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      const double d1 =
          (col - cx1) * (col - cx1) + (row - cy) * (row - cy);
      const double d2 =
          (col - cx2) * (col - cx2) + (row - cy) * (row - cy);
      heights.at(row, col) =
          std::exp(-d1 / 50.0) + std::exp(-d2 / 50.0);
    }
  }
  CanopyMask canopy = make_mask(w, h, {});
  canopy.mask.assign(size_t(w) * h, 1);
  const LabelRaster labels =
      watershed(heights, canopy, {{10, 10, 1, 1.0}, {10, 30, 2, 1.0}});
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      if (col <= 19) CHECK(labels.at(row, col) == 1);
      if (col >= 21) CHECK(labels.at(row, col) == 2);
    }
  }
}

TEST_CASE("watershed is deterministic and every marker keeps a region") {
  SplitMix64 rng(5);
  const int w = 32, h = 32;
  BevRaster heights = make_raster(w, h, {});
  heights.values.resize(size_t(w) * h);
  for (auto& v : heights.values) v = rng.uniform();
  CanopyMask canopy = make_mask(w, h, {});
  canopy.mask.assign(size_t(w) * h, 0);
  add_disc(canopy, 16, 16, 15.0);
  std::vector<Marker> markers;
  for (std::uint32_t i = 1; i <= 5; ++i) {
    markers.push_back({4 + static_cast<int>(i * 4) % 24,
                       3 + static_cast<int>(i * 5) % 24, i, 1.0});
    REQUIRE(canopy.at(markers.back().row, markers.back().col));
  }
  const LabelRaster a = watershed(heights, canopy, markers);
  const LabelRaster b = watershed(heights, canopy, markers);
  CHECK(a.labels == b.labels);
  // labels only inside the canopy, and each marker owns its own cell
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      if (!canopy.at(row, col)) CHECK(a.at(row, col) == 0);
    }
  }
  std::vector<std::size_t> counts(6, 0);
  for (auto v : a.labels) {
    if (v != 0) ++counts[v];
  }
  for (const Marker& m : markers) {
    CHECK(a.at(m.row, m.col) == m.label);
    CHECK(counts[m.label] >= 1);
  }
}

TEST_CASE("watershed regions permute with marker labels") {
  CanopyMask canopy = make_mask(30, 12, std::vector<std::uint8_t>(360, 0));
  add_disc(canopy, 6, 8, 5.0);
  add_disc(canopy, 6, 20, 5.0);
  BevRaster heights = make_raster(30, 12, std::vector<double>(360, 0.5));
  const LabelRaster fwd =
      watershed(heights, canopy, {{6, 8, 1, 1.0}, {6, 20, 2, 1.0}});
  const LabelRaster swapped =
      watershed(heights, canopy, {{6, 8, 2, 1.0}, {6, 20, 1, 1.0}});
  for (std::size_t i = 0; i < fwd.labels.size(); ++i) {
    const std::uint32_t expect =
        fwd.labels[i] == 0 ? 0 : (fwd.labels[i] == 1 ? 2u : 1u);
    CHECK(swapped.labels[i] == expect);
  }
}

TEST_CASE("correct_areas arithmetic") {
  LabelRaster labels;
  labels.spec = {10, 10, 1.0, 0.0, 0.0};
  labels.labels.assign(100, 0);

  SUBCASE("factor 1 when labels cover the footprint") {
    for (int i = 0; i < 40; ++i) labels.labels[i] = 1;
    for (int i = 40; i < 100; ++i) labels.labels[i] = 2;
    const auto areas = correct_areas(labels, 100.0, 1.0);
    CHECK(areas[0].corrected_area_m2 == doctest::Approx(40.0));
    CHECK(areas[1].corrected_area_m2 == doctest::Approx(60.0));
  }

  SUBCASE("unlabeled area redistributed proportionally") {
    // Two trees of 45 m^2 raw in a 100 m^2 footprint -> 50 m^2 each.
    for (int i = 0; i < 45; ++i) labels.labels[i] = 1;
    for (int i = 45; i < 90; ++i) labels.labels[i] = 2;
    const auto areas = correct_areas(labels, 100.0, 1.0);
    CHECK(areas[0].corrected_area_m2 == doctest::Approx(50.0));
    CHECK(areas[1].corrected_area_m2 == doctest::Approx(50.0));
  }

  SUBCASE("sum matches the published footprint") {
    for (int i = 0; i < 30; ++i) labels.labels[i] = 1;
    for (int i = 30; i < 77; ++i) labels.labels[i] = 2;
    const double footprint = 40965.3;
    const auto areas = correct_areas(labels, footprint, 1.0);
    double sum = 0.0;
    for (const auto& a : areas) sum += a.corrected_area_m2;
    CHECK(std::abs(sum - footprint) / footprint < 1e-6);
    // ratios preserved
    CHECK(areas[0].corrected_area_m2 / areas[1].corrected_area_m2 ==
          doctest::Approx(30.0 / 47.0).epsilon(1e-12));
  }

  SUBCASE("no labels throws") {
    CHECK_THROWS_AS((void)correct_areas(labels, 10.0, 1.0), NoLabels);
  }
}

TEST_CASE("label raster file round trip") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "canopy_seg_tests";
  fs::create_directories(dir);
  LabelRaster labels;
  labels.spec = {7, 5, 0.25, 1.0, 2.0};
  SplitMix64 rng(8);
  for (std::size_t i = 0; i < labels.spec.cells(); ++i) {
    labels.labels.push_back(static_cast<std::uint32_t>(rng.next() % 4));
  }
  write_lblr1(labels, dir / "l.lblr1");
  const LabelRaster back = read_lblr1(dir / "l.lblr1");
  CHECK(back.spec == labels.spec);
  CHECK(back.labels == labels.labels);
}
