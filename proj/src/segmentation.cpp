#include "canopy/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <queue>

#include "canopy/errors.hpp"

namespace canopy {

namespace {

constexpr int kNeighborRow[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
constexpr int kNeighborCol[8] = {-1, 0, 1, -1, 1, -1, 0, 1};

void check_same_grid(const GridSpec& a, const GridSpec& b, const char* what) {
  if (!(a == b)) {
    throw LengthMismatch(std::string(what) + ": grid specs differ");
  }
}

}  // namespace

std::uint32_t LabelRaster::max_label() const {
  std::uint32_t m = 0;
  for (auto v : labels) m = std::max(m, v);
  return m;
}

CoreStats core_stats(const BevRaster& normalized, const CanopyMask& mask,
                     double alpha) {
  check_same_grid(normalized.spec, mask.spec, "core_stats");
  double sum = 0.0, sum_sq = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < mask.mask.size(); ++i) {
    if (mask.mask[i]) {
      const double v = normalized.values[i];
      sum += v;
      sum_sq += v * v;
      ++n;
    }
  }
  if (n == 0) {
    throw EmptyMask("core_stats: canopy mask has no true cells");
  }
  CoreStats stats;
  stats.mu_h = sum / static_cast<double>(n);
  // Population variance (the raster is the full population of cells).
  const double var =
      std::max(0.0, sum_sq / static_cast<double>(n) - stats.mu_h * stats.mu_h);
  stats.sigma_h = std::sqrt(var);
  stats.t_core = stats.mu_h + alpha * stats.sigma_h;
  return stats;
}

CanopyMask tree_core_mask(const BevRaster& normalized, const CanopyMask& mask,
                          const CoreStats& stats) {
  check_same_grid(normalized.spec, mask.spec, "tree_core_mask");
  CanopyMask core;
  core.spec = mask.spec;
  core.mask.resize(mask.mask.size());
  for (std::size_t i = 0; i < mask.mask.size(); ++i) {
    core.mask[i] =
        (mask.mask[i] && normalized.values[i] > stats.t_core) ? 1 : 0;
  }
  return core;
}

namespace {

// Felzenszwalb-Huttenlocher lower-envelope transform of
// D(x) = min_i (x - site[i])^2 + f[i].
void dt1d(const std::vector<int>& sites, const std::vector<double>& f,
          const std::vector<int>& query, std::vector<double>& out) {
  const int n = static_cast<int>(sites.size());
  std::vector<int> v(static_cast<std::size_t>(n));
  std::vector<double> z(static_cast<std::size_t>(n) + 1);
  int k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  for (int q = 1; q < n; ++q) {
    double s;
    for (;;) {
      const int p = v[static_cast<std::size_t>(k)];
      s = ((f[static_cast<std::size_t>(q)] + sites[static_cast<std::size_t>(q)] * static_cast<double>(sites[static_cast<std::size_t>(q)])) -
           (f[static_cast<std::size_t>(p)] + sites[static_cast<std::size_t>(p)] * static_cast<double>(sites[static_cast<std::size_t>(p)]))) /
          (2.0 * (sites[static_cast<std::size_t>(q)] - sites[static_cast<std::size_t>(p)]));
      if (s <= z[static_cast<std::size_t>(k)]) {
        --k;
      } else {
        break;
      }
    }
    ++k;
    v[static_cast<std::size_t>(k)] = q;
    z[static_cast<std::size_t>(k)] = s;
    z[static_cast<std::size_t>(k) + 1] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (std::size_t qi = 0; qi < query.size(); ++qi) {
    const double x = query[qi];
    while (z[static_cast<std::size_t>(k) + 1] < x) ++k;
    const int site = sites[static_cast<std::size_t>(v[static_cast<std::size_t>(k)])];
    out[qi] = (x - site) * (x - site) + f[static_cast<std::size_t>(v[static_cast<std::size_t>(k)])];
  }
}

}  // namespace

BevRaster edt(const CanopyMask& mask) {
  const int w = mask.spec.width, h = mask.spec.height;
  BevRaster out;
  out.spec = mask.spec;
  out.values.assign(mask.spec.cells(), 0.0);

  // Phase 1: vertical distance to the nearest false cell per column, with
  // virtual background rows just outside the grid.
  std::vector<double> g(mask.spec.cells());
  for (int col = 0; col < w; ++col) {
    double d = 0.0;  // virtual row -1 is background
    for (int row = 0; row < h; ++row) {
      d = mask.at(row, col) ? d + 1.0 : 0.0;
      g[static_cast<std::size_t>(row) * w + col] = d;
    }
    d = 0.0;  // virtual row h is background
    for (int row = h - 1; row >= 0; --row) {
      d = mask.at(row, col) ? d + 1.0 : 0.0;
      auto& cell = g[static_cast<std::size_t>(row) * w + col];
      cell = std::min(cell, d);
    }
  }

  // Phase 2: per-row lower envelope over squared distances, with virtual
  // background columns at -1 and w.
  std::vector<int> sites(static_cast<std::size_t>(w) + 2);
  std::vector<double> f(static_cast<std::size_t>(w) + 2);
  std::vector<int> query(static_cast<std::size_t>(w));
  std::vector<double> row_out(static_cast<std::size_t>(w));
  for (int col = 0; col < w; ++col) query[static_cast<std::size_t>(col)] = col;
  for (int row = 0; row < h; ++row) {
    sites[0] = -1;
    f[0] = 0.0;
    for (int col = 0; col < w; ++col) {
      sites[static_cast<std::size_t>(col) + 1] = col;
      const double gv = g[static_cast<std::size_t>(row) * w + col];
      f[static_cast<std::size_t>(col) + 1] = gv * gv;
    }
    sites[static_cast<std::size_t>(w) + 1] = w;
    f[static_cast<std::size_t>(w) + 1] = 0.0;
    dt1d(sites, f, query, row_out);
    for (int col = 0; col < w; ++col) {
      out.at(row, col) =
          mask.at(row, col) ? std::sqrt(row_out[static_cast<std::size_t>(col)])
                            : 0.0;
    }
  }
  return out;
}

std::vector<Marker> find_markers(const BevRaster& edt_map,
                                 const CanopyMask& core,
                                 double min_peak_distance_cells) {
  check_same_grid(edt_map.spec, core.spec, "find_markers");
  const int w = core.spec.width, h = core.spec.height;
  if (core.count() == 0) {
    throw NoMarkers("find_markers: empty tree-core mask (no trees detected)");
  }

  // Local maxima: no 8-neighbor has a strictly greater distance value.
  std::vector<std::uint8_t> is_max(core.spec.cells(), 0);
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      if (!core.at(row, col)) continue;
      const double v = edt_map.at(row, col);
      bool max = true;
      for (int k = 0; k < 8 && max; ++k) {
        const int nr = row + kNeighborRow[k], nc = col + kNeighborCol[k];
        if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
        if (edt_map.at(nr, nc) > v) max = false;
      }
      if (max) is_max[static_cast<std::size_t>(row) * w + col] = 1;
    }
  }

  // Collapse equal-valued plateau components (8-connected) to their centroid
  // cell; ties in the centroid pick resolve row-major.
  struct Candidate {
    int row, col;
    double value;
  };
  std::vector<Candidate> candidates;
  std::vector<std::uint8_t> visited(core.spec.cells(), 0);
  std::vector<std::pair<int, int>> component, stack;
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      const std::size_t idx = static_cast<std::size_t>(row) * w + col;
      if (!is_max[idx] || visited[idx]) continue;
      const double value = edt_map.at(row, col);
      component.clear();
      stack.assign(1, {row, col});
      visited[idx] = 1;
      while (!stack.empty()) {
        const auto [r, c] = stack.back();
        stack.pop_back();
        component.push_back({r, c});
        for (int k = 0; k < 8; ++k) {
          const int nr = r + kNeighborRow[k], nc = c + kNeighborCol[k];
          if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
          const std::size_t nidx = static_cast<std::size_t>(nr) * w + nc;
          if (visited[nidx] || !is_max[nidx]) continue;
          if (edt_map.at(nr, nc) != value) continue;
          visited[nidx] = 1;
          stack.push_back({nr, nc});
        }
      }
      double mean_r = 0.0, mean_c = 0.0;
      for (const auto& [r, c] : component) {
        mean_r += r;
        mean_c += c;
      }
      mean_r /= static_cast<double>(component.size());
      mean_c /= static_cast<double>(component.size());
      std::sort(component.begin(), component.end());
      std::pair<int, int> best = component.front();
      double best_d = std::numeric_limits<double>::infinity();
      for (const auto& cell : component) {
        const double dr = cell.first - mean_r, dc = cell.second - mean_c;
        const double d = dr * dr + dc * dc;
        if (d < best_d) {
          best_d = d;
          best = cell;
        }
      }
      candidates.push_back({best.first, best.second, value});
    }
  }

  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) {
              if (a.value != b.value) return a.value > b.value;
              if (a.row != b.row) return a.row < b.row;
              return a.col < b.col;
            });

  std::vector<Marker> markers;
  const double min_sq = min_peak_distance_cells * min_peak_distance_cells;
  for (const Candidate& cand : candidates) {
    bool ok = true;
    for (const Marker& m : markers) {
      const double dr = cand.row - m.row, dc = cand.col - m.col;
      if (dr * dr + dc * dc < min_sq) {
        ok = false;
        break;
      }
    }
    if (ok) {
      markers.push_back({cand.row, cand.col,
                         static_cast<std::uint32_t>(markers.size() + 1),
                         cand.value});
    }
  }
  return markers;
}

LabelRaster watershed(const BevRaster& normalized, const CanopyMask& canopy,
                      const std::vector<Marker>& markers) {
  check_same_grid(normalized.spec, canopy.spec, "watershed");
  if (markers.empty()) {
    throw NoMarkers("watershed: no markers");
  }
  const int w = canopy.spec.width, h = canopy.spec.height;

  LabelRaster labels;
  labels.spec = canopy.spec;
  labels.labels.assign(canopy.spec.cells(), 0);

  struct Entry {
    double neg_height;
    std::uint64_t seq;
    int row, col;
    std::uint32_t label;
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.neg_height != b.neg_height) return a.neg_height > b.neg_height;
      return a.seq > b.seq;
    }
  };
  std::priority_queue<Entry, std::vector<Entry>, Later> frontier;
  std::uint64_t seq = 0;

  auto enqueue_neighbors = [&](int row, int col, std::uint32_t label) {
    for (int k = 0; k < 8; ++k) {
      const int nr = row + kNeighborRow[k], nc = col + kNeighborCol[k];
      if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
      if (!canopy.at(nr, nc) || labels.at(nr, nc) != 0) continue;
      frontier.push({-normalized.at(nr, nc), seq++, nr, nc, label});
    }
  };

  for (const Marker& m : markers) {
    if (m.row < 0 || m.row >= h || m.col < 0 || m.col >= w ||
        !canopy.at(m.row, m.col)) {
      throw MarkerOutsideCanopy("watershed: marker " + std::to_string(m.label) +
                                " at (" + std::to_string(m.row) + "," +
                                std::to_string(m.col) +
                                ") lies outside the canopy mask");
    }
    labels.at(m.row, m.col) = m.label;
  }
  for (const Marker& m : markers) {
    enqueue_neighbors(m.row, m.col, m.label);
  }

  while (!frontier.empty()) {
    const Entry e = frontier.top();
    frontier.pop();
    if (labels.at(e.row, e.col) != 0) continue;
    labels.at(e.row, e.col) = e.label;
    enqueue_neighbors(e.row, e.col, e.label);
  }
  return labels;
}

std::vector<TreeArea> correct_areas(const LabelRaster& labels,
                                    double footprint_m2, double cell_size_m) {
  const std::uint32_t k = labels.max_label();
  if (k == 0) {
    throw NoLabels("correct_areas: label raster has no labeled cells");
  }
  std::vector<std::size_t> counts(static_cast<std::size_t>(k) + 1, 0);
  for (auto v : labels.labels) ++counts[v];

  const double cell_area = cell_size_m * cell_size_m;
  double raw_sum = 0.0;
  std::vector<TreeArea> areas;
  for (std::uint32_t label = 1; label <= k; ++label) {
    TreeArea a;
    a.label = label;
    a.raw_area_m2 = static_cast<double>(counts[label]) * cell_area;
    raw_sum += a.raw_area_m2;
    areas.push_back(a);
  }
  if (raw_sum <= 0.0) {
    throw NoLabels("correct_areas: zero total labeled area");
  }
  const double factor = footprint_m2 / raw_sum;
  for (TreeArea& a : areas) {
    a.corrected_area_m2 = a.raw_area_m2 * factor;
  }
  return areas;
}

// --- file format ------------------------------------------------------------

void write_lblr1(const LabelRaster& labels, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot open for writing: " + path.string());
  char buf[160];
  std::snprintf(buf, sizeof(buf), "LBLR1 %d %d %.17g %.17g %.17g\n",
                labels.spec.width, labels.spec.height, labels.spec.cell_size_m,
                labels.spec.origin_x_m, labels.spec.origin_y_m);
  out << buf;
  out.write(reinterpret_cast<const char*>(labels.labels.data()),
            static_cast<std::streamsize>(labels.labels.size() *
                                         sizeof(std::uint32_t)));
  if (!out) throw IoFailure("write failed: " + path.string());
}

LabelRaster read_lblr1(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open label raster: " + path.string());
  std::string line;
  if (!std::getline(in, line)) {
    throw MalformedHeader("empty label raster: " + path.string());
  }
  char magic[16] = {0};
  LabelRaster labels;
  if (std::sscanf(line.c_str(), "%15s %d %d %lg %lg %lg", magic,
                  &labels.spec.width, &labels.spec.height,
                  &labels.spec.cell_size_m, &labels.spec.origin_x_m,
                  &labels.spec.origin_y_m) != 6 ||
      std::strcmp(magic, "LBLR1") != 0) {
    throw MalformedHeader("bad label raster header in " + path.string());
  }
  if (labels.spec.width <= 0 || labels.spec.height <= 0) {
    throw MalformedHeader("non-positive dimensions in " + path.string());
  }
  labels.labels.resize(labels.spec.cells());
  in.read(reinterpret_cast<char*>(labels.labels.data()),
          static_cast<std::streamsize>(labels.labels.size() *
                                       sizeof(std::uint32_t)));
  if (static_cast<std::size_t>(in.gcount()) !=
      labels.labels.size() * sizeof(std::uint32_t)) {
    throw TruncatedBody("label raster truncated after " +
                        std::to_string(in.gcount()) + " bytes in " +
                        path.string());
  }
  return labels;
}

void write_label_pgm(const LabelRaster& labels,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot open for writing: " + path.string());
  out << "P5\n" << labels.spec.width << " " << labels.spec.height << "\n255\n";
  std::vector<std::uint8_t> bytes;
  bytes.reserve(labels.labels.size());
  for (int row = labels.spec.height - 1; row >= 0; --row) {
    for (int col = 0; col < labels.spec.width; ++col) {
      const std::uint32_t v = labels.at(row, col);
      // Deterministic grayscale cycle; background stays black.
      bytes.push_back(v == 0 ? 0
                             : static_cast<std::uint8_t>(32 + (v * 71) % 224));
    }
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoFailure("write failed: " + path.string());
}

}  // namespace canopy
