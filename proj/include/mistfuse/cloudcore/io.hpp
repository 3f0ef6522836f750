// mistfuse - header-only toolkit for random-object LiDAR perturbation
// SPDX-License-Identifier: MIT
//
// KITTI-style binary frames (x, y, z, intensity as little-endian float32,
// no header) and plain-text box labels (`cx cy cz l w h yaw class`).

#ifndef MISTFUSE_CLOUDCORE_IO_HPP
#define MISTFUSE_CLOUDCORE_IO_HPP

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mistfuse/cloudcore/point_cloud.hpp"

namespace mistfuse {

/// Malformed or unreadable input file. what() names the offending path.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing file or directory.
class PathError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    v = ((v & 0xFF) << 24) | ((v & 0xFF00) << 8) | ((v >> 8) & 0xFF00) | (v >> 24);
  }
  return v;
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PathError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace detail

inline PointCloud decode_kitti_bin(const std::string& bytes, const std::string& name = "<memory>") {
  constexpr std::size_t kStride = 4 * sizeof(float);
  if (bytes.size() % kStride != 0) {
    throw FormatError(name + ": malformed frame, " + std::to_string(bytes.size()) +
                      " bytes is not a multiple of 16");
  }
  PointCloud cloud;
  cloud.points.reserve(bytes.size() / kStride);
  for (std::size_t off = 0; off < bytes.size(); off += kStride) {
    float f[4];
    for (int k = 0; k < 4; ++k) {
      std::uint32_t raw;
      std::memcpy(&raw, bytes.data() + off + 4 * k, 4);
      raw = detail::to_little(raw);
      f[k] = std::bit_cast<float>(raw);
    }
    if (!std::isfinite(f[0]) || !std::isfinite(f[1]) || !std::isfinite(f[2]) || !std::isfinite(f[3])) {
      throw FormatError(name + ": non-finite value at point " + std::to_string(off / kStride));
    }
    cloud.points.emplace_back(f[0], f[1], f[2], f[3]);
  }
  return cloud;
}

inline std::string encode_kitti_bin(const PointCloud& cloud) {
  std::string bytes(cloud.size() * 16, '\0');
  std::size_t off = 0;
  for (const auto& p : cloud) {
    const float f[4] = {static_cast<float>(p.x()), static_cast<float>(p.y()), static_cast<float>(p.z()),
                        static_cast<float>(p.intensity)};
    for (float v : f) {
      const std::uint32_t raw = detail::to_little(std::bit_cast<std::uint32_t>(v));
      std::memcpy(bytes.data() + off, &raw, 4);
      off += 4;
    }
  }
  return bytes;
}

inline PointCloud read_kitti_bin(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw PathError("no such file: " + path.string());
  PointCloud cloud = decode_kitti_bin(detail::read_file_bytes(path), path.string());
  cloud.frame_id = path.stem().string();
  return cloud;
}

inline void write_kitti_bin(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw PathError("cannot write " + path.string());
  const std::string bytes = encode_kitti_bin(cloud);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

/// One box per non-blank line; lines starting with '#' are ignored.
inline std::vector<BoundingBox3D> parse_labels(std::istream& in, const std::string& name = "<stream>") {
  std::vector<BoundingBox3D> boxes;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    double cx, cy, cz, l, w, h, yaw;
    std::string cls;
    if (!(ss >> cx >> cy >> cz >> l >> w >> h >> yaw >> cls)) {
      throw FormatError(name + ":" + std::to_string(lineno) + ": expected `cx cy cz l w h yaw class`");
    }
    BoundingBox3D box({cx, cy, cz}, {l, w, h}, yaw, cls);
    if (!box.valid()) throw FormatError(name + ":" + std::to_string(lineno) + ": degenerate box");
    boxes.push_back(std::move(box));
  }
  return boxes;
}

inline std::vector<BoundingBox3D> read_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PathError("cannot open " + path.string());
  return parse_labels(in, path.string());
}

inline void write_labels(const std::filesystem::path& path, const std::vector<BoundingBox3D>& boxes) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw PathError("cannot write " + path.string());
  out.precision(17);
  for (const auto& b : boxes) {
    out << b.center.x() << ' ' << b.center.y() << ' ' << b.center.z() << ' ' << b.dims.x() << ' '
        << b.dims.y() << ' ' << b.dims.z() << ' ' << b.yaw << ' ' << b.label << '\n';
  }
}

}  // namespace mistfuse

#endif  // MISTFUSE_CLOUDCORE_IO_HPP
