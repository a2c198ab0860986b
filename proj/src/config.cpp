#include "canopy/config.hpp"

#include <fstream>
#include <functional>
#include <iostream>
#include <map>

#include "canopy/errors.hpp"

namespace canopy {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

double parse_number(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw TypeMismatch("config key '" + key + "': not a number: '" + value +
                       "'");
  }
}

void check_range(const std::string& key, double v, double lo, double hi,
                 bool lo_open, bool hi_open) {
  const bool ok = (lo_open ? v > lo : v >= lo) && (hi_open ? v < hi : v <= hi);
  if (!ok) {
    throw TypeMismatch("config key '" + key + "': value " +
                       std::to_string(v) + " out of range");
  }
}

}  // namespace

void apply_config_key(PipelineConfig& cfg, const std::string& key,
                      const std::string& value) {
  const double v = parse_number(key, value);
  if (key == "cell_size_m") {
    check_range(key, v, 0.0, 1e9, true, true);
    cfg.cell_size_m = v;
  } else if (key == "h_min") {
    check_range(key, v, 0.0, 1.0, true, true);
    cfg.h_min = v;
  } else if (key == "core_alpha") {
    cfg.core_alpha = v;
  } else if (key == "min_peak_distance_m") {
    check_range(key, v, 0.0, 1e9, true, true);
    cfg.min_peak_distance_m = v;
  } else if (key == "sigma_conifer_threshold") {
    cfg.sigma_conifer_threshold = v;
  } else if (key == "latitude_deg") {
    check_range(key, v, -90.0, 90.0, false, false);
    cfg.latitude_deg = v;
  } else if (key == "lai_broadleaf") {
    cfg.lai_broadleaf = v;
  } else if (key == "lai_conifer") {
    cfg.lai_conifer = v;
  } else if (key == "rho_broadleaf") {
    cfg.rho_broadleaf = v;
  } else if (key == "rho_conifer") {
    cfg.rho_conifer = v;
  } else if (key == "ground_percentile") {
    check_range(key, v, 0.0, 50.0, true, true);
    cfg.ground_percentile = v;
  } else if (key == "top_percentile") {
    check_range(key, v, 50.0, 100.0, true, true);
    cfg.top_percentile = v;
  } else {
    std::cerr << "warning: unknown config key '" << key << "' ignored\n";
    return;
  }
}

PipelineConfig read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoFailure("cannot open config file: " + path.string());
  }
  PipelineConfig cfg;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw TypeMismatch("config line is not 'key = value': '" + line + "'");
    }
    apply_config_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  if (cfg.ground_percentile >= cfg.top_percentile) {
    throw TypeMismatch("config: ground_percentile must be below top_percentile");
  }
  return cfg;
}

}  // namespace canopy
