#include "canopy/manifest.hpp"

#include <cstdio>
#include <fstream>

#include "canopy/errors.hpp"

namespace canopy {

std::string hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoFailure("cannot hash missing file: " + path.string());
  }
  std::uint64_t hash = 0xcbf29ce484222325ULL;  // FNV-1a offset basis
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 0x100000001b3ULL;  // FNV prime
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(hash));
  return hex;
}

void write_manifest(const RunManifest& manifest,
                    const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoFailure("cannot open for writing: " + path.string());
  out << "{\n  \"tool\": \"" << kToolVersion << "\",\n  \"inputs\": [";
  for (std::size_t i = 0; i < manifest.inputs.size(); ++i) {
    out << (i ? ", " : "") << "\"" << manifest.inputs[i] << "\"";
  }
  out << "],\n  \"config\": {\n";
  char buf[256];
  const PipelineConfig& c = manifest.config;
  const std::pair<const char*, double> fields[] = {
      {"cell_size_m", c.cell_size_m},
      {"h_min", c.h_min},
      {"core_alpha", c.core_alpha},
      {"min_peak_distance_m", c.min_peak_distance_m},
      {"sigma_conifer_threshold", c.sigma_conifer_threshold},
      {"latitude_deg", c.latitude_deg},
      {"lai_broadleaf", c.lai_broadleaf},
      {"lai_conifer", c.lai_conifer},
      {"rho_broadleaf", c.rho_broadleaf},
      {"rho_conifer", c.rho_conifer},
      {"ground_percentile", c.ground_percentile},
      {"top_percentile", c.top_percentile}};
  for (std::size_t i = 0; i < std::size(fields); ++i) {
    std::snprintf(buf, sizeof(buf), "    \"%s\": %.17g%s\n", fields[i].first,
                  fields[i].second, i + 1 < std::size(fields) ? "," : "");
    out << buf;
  }
  out << "  },\n  \"timings_ms\": {\n";
  for (std::size_t i = 0; i < manifest.timings.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "    \"%s\": %.3f%s\n",
                  manifest.timings[i].name.c_str(), manifest.timings[i].ms,
                  i + 1 < manifest.timings.size() ? "," : "");
    out << buf;
  }
  out << "  },\n  \"outputs\": [\n";
  for (std::size_t i = 0; i < manifest.outputs.size(); ++i) {
    out << "    {\"path\": \"" << manifest.outputs[i].path
        << "\", \"fnv1a64\": \"" << manifest.outputs[i].fnv1a64 << "\"}"
        << (i + 1 < manifest.outputs.size() ? "," : "") << "\n";
  }
  out << "  ]\n}\n";
  if (!out) throw IoFailure("write failed: " + path.string());
}

}  // namespace canopy
