#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "canopy/config.hpp"

namespace canopy {

inline constexpr const char* kToolVersion = "canopy 0.1.0";

/// FNV-1a 64-bit over the file bytes, lowercase hex.
std::string hash_file(const std::filesystem::path& path);

struct StageTiming {
  std::string name;
  double ms = 0.0;
};

struct OutputEntry {
  std::string path;  // relative to the output directory
  std::string fnv1a64;
};

struct RunManifest {
  std::vector<std::string> inputs;
  PipelineConfig config;
  std::vector<StageTiming> timings;
  std::vector<OutputEntry> outputs;
};

void write_manifest(const RunManifest& manifest,
                    const std::filesystem::path& path);

}  // namespace canopy
