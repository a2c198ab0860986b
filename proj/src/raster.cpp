#include "canopy/raster.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

#include "canopy/errors.hpp"

namespace canopy {

std::size_t CanopyMask::count() const {
  std::size_t n = 0;
  for (auto v : mask) n += v != 0;
  return n;
}

RasterPair rasterize(const PointCloud& cloud, double cell_size_m) {
  if (cloud.points.empty()) {
    throw EmptyCloud("rasterize: empty point cloud");
  }
  if (!(cell_size_m > 0.0)) {
    throw TypeMismatch("rasterize: cell size must be positive");
  }

  double min_x = std::numeric_limits<double>::infinity();
  double min_y = min_x;
  double max_x = -min_x, max_y = -min_x;
  for (const Vec3& p : cloud.points) {
    min_x = std::min(min_x, p.x());
    max_x = std::max(max_x, p.x());
    min_y = std::min(min_y, p.y());
    max_y = std::max(max_y, p.y());
  }

  // Grid lower corner one cell below the bounding box; one padding cell on
  // each side.
  const double grid_min_x = min_x - cell_size_m;
  const double grid_min_y = min_y - cell_size_m;
  GridSpec spec;
  spec.cell_size_m = cell_size_m;
  spec.width =
      static_cast<int>(std::floor((max_x - grid_min_x) / cell_size_m)) + 2;
  spec.height =
      static_cast<int>(std::floor((max_y - grid_min_y) / cell_size_m)) + 2;
  spec.origin_x_m = grid_min_x + 0.5 * cell_size_m;
  spec.origin_y_m = grid_min_y + 0.5 * cell_size_m;

  RasterPair out;
  out.height.spec = spec;
  out.height.values.assign(spec.cells(),
                           std::numeric_limits<double>::quiet_NaN());
  out.density.spec = spec;
  out.density.values.assign(spec.cells(), 0.0);

  for (const Vec3& p : cloud.points) {
    const int col = static_cast<int>(std::floor((p.x() - grid_min_x) / cell_size_m));
    const int row = static_cast<int>(std::floor((p.y() - grid_min_y) / cell_size_m));
    double& h = out.height.at(row, col);
    if (std::isnan(h) || p.z() > h) h = p.z();
    out.density.at(row, col) += 1.0;
  }
  return out;
}

namespace {

// Linear-interpolated percentile over sorted values (rank p/100 * (n-1)).
double percentile(const std::vector<double>& sorted, double p) {
  const double rank = p / 100.0 * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

NormalizedHeight normalize_height(const BevRaster& height,
                                  double ground_percentile,
                                  double top_percentile) {
  std::vector<double> finite;
  finite.reserve(height.values.size());
  for (double v : height.values) {
    if (!std::isnan(v)) finite.push_back(v);
  }
  if (finite.empty()) {
    throw EmptyCloud("normalize_height: raster has no data cells");
  }
  if (!(ground_percentile >= 0.0 && top_percentile <= 100.0 &&
        ground_percentile < top_percentile)) {
    throw TypeMismatch("normalize_height: invalid percentiles");
  }
  std::sort(finite.begin(), finite.end());

  NormalizedHeight out;
  out.z_ground = percentile(finite, ground_percentile);
  out.z_top = percentile(finite, top_percentile);
  const double range = out.z_top - out.z_ground;
  if (range < 1e-6) {
    throw DegenerateRange("normalize_height: flat scene (height range " +
                          std::to_string(range) + " m)");
  }
  out.raster.spec = height.spec;
  out.raster.values.reserve(height.values.size());
  for (double v : height.values) {
    if (std::isnan(v)) {
      out.raster.values.push_back(v);
    } else {
      out.raster.values.push_back(
          std::clamp((v - out.z_ground) / range, 0.0, 1.0));
    }
  }
  return out;
}

CanopyMask canopy_mask(const BevRaster& normalized, double h_min) {
  CanopyMask mask;
  mask.spec = normalized.spec;
  mask.mask.reserve(normalized.values.size());
  for (double v : normalized.values) {
    mask.mask.push_back(!std::isnan(v) && v > h_min ? 1 : 0);
  }
  return mask;
}

double footprint_area(const CanopyMask& mask) {
  return static_cast<double>(mask.count()) * mask.spec.cell_size_m *
         mask.spec.cell_size_m;
}

// --- file formats -----------------------------------------------------------

namespace {

void write_grid_header(std::ofstream& out, const char* magic,
                       const GridSpec& spec) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%s %d %d %.17g %.17g %.17g\n", magic,
                spec.width, spec.height, spec.cell_size_m, spec.origin_x_m,
                spec.origin_y_m);
  out << buf;
}

GridSpec read_grid_header(std::ifstream& in, const char* magic,
                          const std::filesystem::path& path) {
  std::string line;
  if (!std::getline(in, line)) {
    throw MalformedHeader("empty raster file: " + path.string());
  }
  char got_magic[16] = {0};
  GridSpec spec;
  if (std::sscanf(line.c_str(), "%15s %d %d %lg %lg %lg", got_magic,
                  &spec.width, &spec.height, &spec.cell_size_m,
                  &spec.origin_x_m, &spec.origin_y_m) != 6 ||
      std::strcmp(got_magic, magic) != 0) {
    throw MalformedHeader("bad raster header (expected magic '" +
                          std::string(magic) + "') in " + path.string());
  }
  if (spec.width <= 0 || spec.height <= 0 || !(spec.cell_size_m > 0.0)) {
    throw MalformedHeader("non-positive raster dimensions in " + path.string());
  }
  return spec;
}

}  // namespace

void write_bevr1(const BevRaster& raster, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot open for writing: " + path.string());
  write_grid_header(out, "BEVR1", raster.spec);
  std::vector<float> row(raster.values.size());
  for (std::size_t i = 0; i < raster.values.size(); ++i) {
    row[i] = static_cast<float>(raster.values[i]);
  }
  out.write(reinterpret_cast<const char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(float)));
  if (!out) throw IoFailure("write failed: " + path.string());
}

BevRaster read_bevr1(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open raster: " + path.string());
  BevRaster raster;
  raster.spec = read_grid_header(in, "BEVR1", path);
  std::vector<float> buf(raster.spec.cells());
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (static_cast<std::size_t>(in.gcount()) != buf.size() * sizeof(float)) {
    throw TruncatedBody("raster body truncated after " +
                        std::to_string(in.gcount()) + " bytes in " +
                        path.string());
  }
  raster.values.assign(buf.begin(), buf.end());
  return raster;
}

void write_mask1(const CanopyMask& mask, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot open for writing: " + path.string());
  write_grid_header(out, "MASK1", mask.spec);
  out.write(reinterpret_cast<const char*>(mask.mask.data()),
            static_cast<std::streamsize>(mask.mask.size()));
  if (!out) throw IoFailure("write failed: " + path.string());
}

CanopyMask read_mask1(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open mask: " + path.string());
  CanopyMask mask;
  mask.spec = read_grid_header(in, "MASK1", path);
  mask.mask.resize(mask.spec.cells());
  in.read(reinterpret_cast<char*>(mask.mask.data()),
          static_cast<std::streamsize>(mask.mask.size()));
  if (static_cast<std::size_t>(in.gcount()) != mask.mask.size()) {
    throw TruncatedBody("mask body truncated after " +
                        std::to_string(in.gcount()) + " bytes in " +
                        path.string());
  }
  for (auto& v : mask.mask) v = v ? 1 : 0;
  return mask;
}

void write_pgm_preview(const BevRaster& normalized,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot open for writing: " + path.string());
  out << "P5\n" << normalized.spec.width << " " << normalized.spec.height
      << "\n255\n";
  std::vector<std::uint8_t> bytes;
  bytes.reserve(normalized.values.size());
  // PGM rows run top to bottom; flip so north (max y) is up.
  for (int row = normalized.spec.height - 1; row >= 0; --row) {
    for (int col = 0; col < normalized.spec.width; ++col) {
      const double v = normalized.at(row, col);
      bytes.push_back(std::isnan(v) ? 0
                                    : static_cast<std::uint8_t>(std::lround(
                                          std::clamp(v, 0.0, 1.0) * 255.0)));
    }
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoFailure("write failed: " + path.string());
}

}  // namespace canopy
