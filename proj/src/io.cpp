#include "canopy/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "canopy/errors.hpp"

namespace canopy {

namespace {

// WGS84 ellipsoid.
constexpr double kSemiMajorM = 6378137.0;
constexpr double kFlattening = 1.0 / 298.257223563;
constexpr double kEccSq = kFlattening * (2.0 - kFlattening);
constexpr double kDegToRad = M_PI / 180.0;

}  // namespace

Vec3 geodetic_to_ecef(const GeodeticPosition& g) {
  const double lat = g.latitude_deg * kDegToRad;
  const double lon = g.longitude_deg * kDegToRad;
  const double sin_lat = std::sin(lat), cos_lat = std::cos(lat);
  const double n = kSemiMajorM / std::sqrt(1.0 - kEccSq * sin_lat * sin_lat);
  return {(n + g.altitude_m) * cos_lat * std::cos(lon),
          (n + g.altitude_m) * cos_lat * std::sin(lon),
          (n * (1.0 - kEccSq) + g.altitude_m) * sin_lat};
}

Vec3 ecef_to_enu(const Vec3& ecef, const GeodeticPosition& anchor) {
  const double lat = anchor.latitude_deg * kDegToRad;
  const double lon = anchor.longitude_deg * kDegToRad;
  const double sl = std::sin(lat), cl = std::cos(lat);
  const double so = std::sin(lon), co = std::cos(lon);
  const Vec3 d = ecef - geodetic_to_ecef(anchor);
  return {-so * d.x() + co * d.y(),
          -sl * co * d.x() - sl * so * d.y() + cl * d.z(),
          cl * co * d.x() + cl * so * d.y() + sl * d.z()};
}

// --- PLY --------------------------------------------------------------------

namespace {

enum class PlyType { f32, f64, u8, i8, u16, i16, u32, i32 };

int ply_type_size(PlyType t) {
  switch (t) {
    case PlyType::u8:
    case PlyType::i8:
      return 1;
    case PlyType::u16:
    case PlyType::i16:
      return 2;
    case PlyType::f32:
    case PlyType::u32:
    case PlyType::i32:
      return 4;
    case PlyType::f64:
      return 8;
  }
  return 0;
}

PlyType parse_ply_type(const std::string& s, const std::string& ctx) {
  if (s == "float" || s == "float32") return PlyType::f32;
  if (s == "double" || s == "float64") return PlyType::f64;
  if (s == "uchar" || s == "uint8") return PlyType::u8;
  if (s == "char" || s == "int8") return PlyType::i8;
  if (s == "ushort" || s == "uint16") return PlyType::u16;
  if (s == "short" || s == "int16") return PlyType::i16;
  if (s == "uint" || s == "uint32") return PlyType::u32;
  if (s == "int" || s == "int32") return PlyType::i32;
  throw MalformedHeader("unsupported PLY property type '" + s + "' " + ctx);
}

struct PlyProperty {
  PlyType type = PlyType::f32;
  std::string name;
  bool is_list = false;
  PlyType count_type = PlyType::u8;
};

double read_binary_scalar(std::istream& in, PlyType t) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), ply_type_size(t));
  switch (t) {
    case PlyType::f32: {
      float v;
      std::memcpy(&v, buf, 4);
      return v;
    }
    case PlyType::f64: {
      double v;
      std::memcpy(&v, buf, 8);
      return v;
    }
    case PlyType::u8:
      return buf[0];
    case PlyType::i8:
      return static_cast<signed char>(buf[0]);
    case PlyType::u16: {
      std::uint16_t v;
      std::memcpy(&v, buf, 2);
      return v;
    }
    case PlyType::i16: {
      std::int16_t v;
      std::memcpy(&v, buf, 2);
      return v;
    }
    case PlyType::u32: {
      std::uint32_t v;
      std::memcpy(&v, buf, 4);
      return v;
    }
    case PlyType::i32: {
      std::int32_t v;
      std::memcpy(&v, buf, 4);
      return v;
    }
  }
  return 0.0;
}

}  // namespace

PointCloud read_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoFailure("cannot open PLY file: " + path.string());
  }

  std::string line;
  int line_no = 0;
  auto next_line = [&]() -> std::string& {
    if (!std::getline(in, line)) {
      throw MalformedHeader("unexpected end of header at line " +
                            std::to_string(line_no) + " in " + path.string());
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++line_no;
    return line;
  };

  if (next_line() != "ply") {
    throw MalformedHeader("missing 'ply' magic at line 1 in " + path.string());
  }

  bool binary = false;
  bool format_seen = false;
  long vertex_count = -1;
  std::vector<PlyProperty> props;
  bool in_vertex_element = false;
  bool past_vertex_element = false;

  for (;;) {
    std::istringstream ls(next_line());
    std::string tok;
    ls >> tok;
    if (tok == "end_header") break;
    if (tok.empty() || tok == "comment" || tok == "obj_info") continue;
    if (tok == "format") {
      std::string fmt, version;
      ls >> fmt >> version;
      if (version != "1.0" || (fmt != "ascii" && fmt != "binary_little_endian")) {
        throw MalformedHeader("unsupported PLY format '" + fmt + " " + version +
                              "' at line " + std::to_string(line_no) + " in " +
                              path.string());
      }
      binary = (fmt == "binary_little_endian");
      format_seen = true;
    } else if (tok == "element") {
      std::string name;
      long count = 0;
      ls >> name >> count;
      if (name == "vertex") {
        vertex_count = count;
        in_vertex_element = true;
      } else {
        if (in_vertex_element) past_vertex_element = true;
        in_vertex_element = false;
      }
    } else if (tok == "property") {
      if (!in_vertex_element) continue;
      std::string t1;
      ls >> t1;
      PlyProperty p;
      if (t1 == "list") {
        std::string ct, vt;
        ls >> ct >> vt >> p.name;
        p.is_list = true;
        p.count_type = parse_ply_type(ct, "at line " + std::to_string(line_no));
        p.type = parse_ply_type(vt, "at line " + std::to_string(line_no));
      } else {
        p.type = parse_ply_type(t1, "at line " + std::to_string(line_no));
        ls >> p.name;
      }
      props.push_back(p);
    }
  }

  if (!format_seen) {
    throw MalformedHeader("missing 'format' line in " + path.string());
  }
  if (vertex_count < 0) {
    throw MalformedHeader("missing 'element vertex' in " + path.string());
  }
  if (past_vertex_element && binary) {
    // Elements between vertex data and end of file are fine for ascii (we
    // stop after vertex_count lines) and for binary, since vertex data comes
    // first in declaration order.
  }

  int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
  for (std::size_t i = 0; i < props.size(); ++i) {
    const auto& p = props[i];
    if (p.is_list) continue;
    if (p.name == "x") ix = static_cast<int>(i);
    if (p.name == "y") iy = static_cast<int>(i);
    if (p.name == "z") iz = static_cast<int>(i);
    if (p.name == "red") ir = static_cast<int>(i);
    if (p.name == "green") ig = static_cast<int>(i);
    if (p.name == "blue") ib = static_cast<int>(i);
  }
  if (ix < 0 || iy < 0 || iz < 0) {
    throw MalformedHeader("vertex element lacks x/y/z properties in " +
                          path.string());
  }
  for (int idx : {ix, iy, iz}) {
    const PlyType t = props[static_cast<std::size_t>(idx)].type;
    if (t != PlyType::f32 && t != PlyType::f64) {
      throw MalformedHeader("x/y/z must be float or double in " + path.string());
    }
  }
  const bool has_colors = ir >= 0 && ig >= 0 && ib >= 0;

  PointCloud cloud;
  cloud.points.reserve(static_cast<std::size_t>(vertex_count));
  if (has_colors) cloud.colors.reserve(static_cast<std::size_t>(vertex_count));

  std::vector<double> row(props.size());
  for (long v = 0; v < vertex_count; ++v) {
    if (binary) {
      for (std::size_t i = 0; i < props.size(); ++i) {
        const auto& p = props[i];
        if (p.is_list) {
          const long count =
              static_cast<long>(read_binary_scalar(in, p.count_type));
          in.seekg(count * ply_type_size(p.type), std::ios::cur);
          row[i] = 0.0;
        } else {
          row[i] = read_binary_scalar(in, p.type);
        }
        if (!in) {
          throw TruncatedBody("PLY body truncated at byte offset " +
                              std::to_string(std::max<long long>(
                                  0, static_cast<long long>(in.tellg()))) +
                              " (vertex " + std::to_string(v) + " of " +
                              std::to_string(vertex_count) + ") in " +
                              path.string());
        }
      }
    } else {
      if (!std::getline(in, line)) {
        throw TruncatedBody("PLY body has " + std::to_string(v) +
                            " of " + std::to_string(vertex_count) +
                            " vertices (ends at line " +
                            std::to_string(line_no) + ") in " + path.string());
      }
      ++line_no;
      std::istringstream ls(line);
      for (std::size_t i = 0; i < props.size(); ++i) {
        if (!(ls >> row[i])) {
          throw TruncatedBody("short vertex row at line " +
                              std::to_string(line_no) + " in " + path.string());
        }
      }
    }
    cloud.points.emplace_back(row[static_cast<std::size_t>(ix)],
                              row[static_cast<std::size_t>(iy)],
                              row[static_cast<std::size_t>(iz)]);
    if (has_colors) {
      cloud.colors.push_back(
          {static_cast<std::uint8_t>(row[static_cast<std::size_t>(ir)]),
           static_cast<std::uint8_t>(row[static_cast<std::size_t>(ig)]),
           static_cast<std::uint8_t>(row[static_cast<std::size_t>(ib)])});
    }
  }
  return cloud;
}

void write_ply(const PointCloud& cloud, const std::filesystem::path& path) {
  if (cloud.points.empty()) {
    throw EmptyCloud("refusing to write empty point cloud: " + path.string());
  }
  if (cloud.has_colors() && cloud.colors.size() != cloud.points.size()) {
    throw LengthMismatch("color array length differs from point count");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoFailure("cannot open for writing: " + path.string());
  }
  out << "ply\nformat binary_little_endian 1.0\n"
      << "element vertex " << cloud.points.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n";
  if (cloud.has_colors()) {
    out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  }
  out << "end_header\n";
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const float xyz[3] = {static_cast<float>(cloud.points[i].x()),
                          static_cast<float>(cloud.points[i].y()),
                          static_cast<float>(cloud.points[i].z())};
    out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
    if (cloud.has_colors()) {
      const Rgb& c = cloud.colors[i];
      out.write(reinterpret_cast<const char*>(&c), 3);
    }
  }
  if (!out) {
    throw IoFailure("write failed: " + path.string());
  }
}

// --- trajectory CSV ---------------------------------------------------------

Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoFailure("cannot open trajectory CSV: " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw MalformedRow("empty trajectory file: " + path.string());
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "frame_id,x,y,z,qw,qx,qy,qz") {
    throw MalformedRow("bad CSV header at line 1 (expected "
                       "'frame_id,x,y,z,qw,qx,qy,qz') in " + path.string());
  }

  Trajectory traj;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    double vals[8];
    for (int i = 0; i < 8; ++i) {
      if (!std::getline(ls, field, ',')) {
        throw MalformedRow("short row at line " + std::to_string(line_no) +
                           " in " + path.string());
      }
      try {
        std::size_t used = 0;
        vals[i] = std::stod(field, &used);
        if (used != field.size()) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        throw MalformedRow("non-numeric field '" + field + "' at line " +
                           std::to_string(line_no) + " in " + path.string());
      }
    }
    Pose pose;
    pose.frame_id = static_cast<std::int64_t>(vals[0]);
    pose.position = {vals[1], vals[2], vals[3]};
    pose.orientation = {vals[4], vals[5], vals[6], vals[7]};
    try {
      pose.orientation.normalize();
    } catch (const MalformedRow&) {
      throw MalformedRow("zero-norm quaternion at line " +
                         std::to_string(line_no) + " in " + path.string());
    }
    traj.poses.push_back(pose);
  }
  if (traj.poses.empty()) {
    throw MalformedRow("trajectory has no poses: " + path.string());
  }
  std::stable_sort(traj.poses.begin(), traj.poses.end(),
                   [](const Pose& a, const Pose& b) {
                     return a.frame_id < b.frame_id;
                   });
  for (std::size_t i = 1; i < traj.poses.size(); ++i) {
    if (traj.poses[i].frame_id == traj.poses[i - 1].frame_id) {
      throw DuplicateFrame("duplicate frame_id " +
                           std::to_string(traj.poses[i].frame_id) + " in " +
                           path.string());
    }
  }
  return traj;
}

void write_trajectory_csv(const Trajectory& traj,
                          const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoFailure("cannot open for writing: " + path.string());
  }
  out << "frame_id,x,y,z,qw,qx,qy,qz\n";
  char buf[256];
  for (const Pose& p : traj.poses) {
    std::snprintf(buf, sizeof(buf),
                  "%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  static_cast<long long>(p.frame_id), p.position.x(),
                  p.position.y(), p.position.z(), p.orientation.w,
                  p.orientation.x, p.orientation.y, p.orientation.z);
    out << buf;
  }
  if (!out) {
    throw IoFailure("write failed: " + path.string());
  }
}

// --- geodetic JSON ----------------------------------------------------------

namespace {

double require_number(const nlohmann::json& obj, const char* field,
                      const std::string& ctx) {
  if (!obj.contains(field) || !obj[field].is_number()) {
    throw SchemaViolation("missing or non-numeric field '" +
                          std::string(field) + "' in " + ctx);
  }
  return obj[field].get<double>();
}

QuatRotation euler_zyx_deg_to_quat(double x_deg, double y_deg, double z_deg) {
  // Rotations applied in Z-Y-X order: R = Rz * Ry * Rx.
  const Eigen::Quaterniond q =
      Eigen::AngleAxisd(z_deg * kDegToRad, Vec3::UnitZ()) *
      Eigen::AngleAxisd(y_deg * kDegToRad, Vec3::UnitY()) *
      Eigen::AngleAxisd(x_deg * kDegToRad, Vec3::UnitX());
  return QuatRotation::from_eigen(q.normalized());
}

}  // namespace

Trajectory read_trajectory_geodetic(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoFailure("cannot open geodetic trajectory: " + path.string());
  }
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaViolation("invalid JSON in " + path.string() + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("cameraFrames") ||
      !doc["cameraFrames"].is_array()) {
    throw SchemaViolation("missing field 'cameraFrames' in " + path.string());
  }
  const auto& frames = doc["cameraFrames"];
  if (frames.empty()) {
    throw EmptyFrames("'cameraFrames' is empty in " + path.string());
  }

  Trajectory traj;
  GeodeticPosition anchor;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const std::string ctx =
        "cameraFrames[" + std::to_string(i) + "] of " + path.string();
    const auto& frame = frames[i];
    if (!frame.is_object() || !frame.contains("position") ||
        !frame["position"].is_object()) {
      throw SchemaViolation("missing field 'position' in " + ctx);
    }
    GeodeticPosition g;
    g.latitude_deg = require_number(frame["position"], "latitude", ctx);
    g.longitude_deg = require_number(frame["position"], "longitude", ctx);
    g.altitude_m = require_number(frame["position"], "altitude", ctx);
    if (g.latitude_deg < -90.0 || g.latitude_deg > 90.0 ||
        g.longitude_deg < -180.0 || g.longitude_deg > 180.0) {
      throw SchemaViolation("latitude/longitude out of range in " + ctx);
    }
    if (i == 0) anchor = g;

    Pose pose;
    pose.frame_id = static_cast<std::int64_t>(i);
    pose.position = ecef_to_enu(geodetic_to_ecef(g), anchor);
    if (frame.contains("rotation")) {
      if (!frame["rotation"].is_object()) {
        throw SchemaViolation("non-object 'rotation' in " + ctx);
      }
      pose.orientation = euler_zyx_deg_to_quat(
          require_number(frame["rotation"], "x", ctx),
          require_number(frame["rotation"], "y", ctx),
          require_number(frame["rotation"], "z", ctx));
    }
    traj.poses.push_back(pose);
  }
  return traj;
}

Trajectory read_trajectory_any(const std::filesystem::path& path) {
  if (path.extension() == ".json") {
    return read_trajectory_geodetic(path);
  }
  return read_trajectory_csv(path);
}

}  // namespace canopy
