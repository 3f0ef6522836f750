// mistfuse - header-only toolkit for random-object LiDAR perturbation
// SPDX-License-Identifier: MIT
//
// Spinning-LiDAR sensor model with per-ring inclination and origin height.
// Beams are coplanar per ring but need not share an origin: ring i fires
// from (0, 0, h_i) at inclination theta_i, so its returns satisfy
//   z = tan(theta_i) * d_xy + h_i,   d_xy = sqrt(x^2 + y^2).

#ifndef MISTFUSE_RANGESIM_LASER_MODEL_HPP
#define MISTFUSE_RANGESIM_LASER_MODEL_HPP

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mistfuse/cloudcore/io.hpp"
#include "mistfuse/cloudcore/point_cloud.hpp"

namespace mistfuse {

struct LaserRing {
  double inclination = 0.0;  // radians
  double height = 0.0;       // meters above the sensor origin

  bool operator==(const LaserRing&) const = default;
};

struct LaserModel {
  static constexpr int kDefaultAzimuthBins = 2048;

  /// Ordered by strictly decreasing inclination; row 0 is the top ring.
  std::vector<LaserRing> rings;
  int azimuth_bins = kDefaultAzimuthBins;
  double azimuth_origin = -std::numbers::pi;
  /// Back-project with per-ring origin heights instead of a shared origin.
  bool use_corrected_backprojection = true;
  /// Use h^2 cos^2(theta) under the square root of the range correction
  /// instead of the literal h^2 cos(theta).
  bool corrected_radicand = false;

  bool operator==(const LaserModel&) const = default;

  int ring_count() const { return static_cast<int>(rings.size()); }
  double azimuth_pitch() const { return 2.0 * std::numbers::pi / azimuth_bins; }

  /// Throws std::invalid_argument on a broken invariant.
  void validate() const {
    if (rings.empty()) throw std::invalid_argument("LaserModel: no rings");
    if (azimuth_bins < 16) throw std::invalid_argument("LaserModel: azimuth_bins must be >= 16");
    if (!std::isfinite(azimuth_origin)) throw std::invalid_argument("LaserModel: bad azimuth_origin");
    for (std::size_t i = 0; i < rings.size(); ++i) {
      if (!std::isfinite(rings[i].inclination) || !std::isfinite(rings[i].height)) {
        throw std::invalid_argument("LaserModel: non-finite ring parameter");
      }
      if (std::abs(rings[i].height) >= 1.0) throw std::invalid_argument("LaserModel: |h_i| must be < 1 m");
      if (i > 0 && !(rings[i].inclination < rings[i - 1].inclination)) {
        throw std::invalid_argument("LaserModel: inclinations must be strictly decreasing");
      }
    }
  }

  /// Evenly spaced inclinations from top to bottom, all heights zero.
  static LaserModel uniform(int ring_count, double top, double bottom, int bins = kDefaultAzimuthBins) {
    if (ring_count < 1) throw std::invalid_argument("LaserModel::uniform: ring_count < 1");
    LaserModel m;
    m.azimuth_bins = bins;
    for (int i = 0; i < ring_count; ++i) {
      const double t = ring_count == 1 ? 0.0 : static_cast<double>(i) / (ring_count - 1);
      m.rings.push_back({top + t * (bottom - top), 0.0});
    }
    m.validate();
    return m;
  }

  /// 64-ring layout of a KITTI-style HDL-64E: 32 upper rings from +2.0 to
  /// -8.33 degrees in 1/3 degree steps, 32 lower rings from -8.83 to -24.33
  /// degrees in 1/2 degree steps, shared origin.
  static LaserModel kitti_hdl64(int bins = kDefaultAzimuthBins) {
    LaserModel m;
    m.azimuth_bins = bins;
    constexpr double deg = std::numbers::pi / 180.0;
    for (int i = 0; i < 32; ++i) m.rings.push_back({(2.0 - i / 3.0) * deg, 0.0});
    for (int i = 0; i < 32; ++i) m.rings.push_back({(-8.83 - 0.5 * i) * deg, 0.0});
    m.validate();
    return m;
  }

  /// Same inclinations, all origins collapsed onto the sensor origin.
  LaserModel shared_origin() const {
    LaserModel m = *this;
    for (auto& r : m.rings) r.height = 0.0;
    m.use_corrected_backprojection = false;
    return m;
  }

  double column_center(int col) const { return azimuth_origin + (col + 0.5) * azimuth_pitch(); }

  int column_of(double azimuth) const {
    double rel = std::fmod(azimuth - azimuth_origin, 2.0 * std::numbers::pi);
    if (rel < 0.0) rel += 2.0 * std::numbers::pi;
    int col = static_cast<int>(std::floor(rel / azimuth_pitch()));
    if (col >= azimuth_bins) col -= azimuth_bins;
    return col;
  }
};

/**
 * @brief Where a point falls under a LaserModel.
 *
 * Ring choice minimises the height residual z - (tan(theta_i) d_xy + h_i).
 * Vertical distances are measured as height residuals at the point's own
 * d_xy; `vertical_pitch` is the height gap to the neighbouring beam on the
 * residual's side (the opposite side for the outermost rings).
 */
struct BeamAssignment {
  int row = -1;
  int col = -1;
  double residual = 0.0;
  double vertical_pitch = std::numeric_limits<double>::infinity();
  double azimuth_offset = 0.0;  // radians from the column center
  bool assignable = false;      // |residual| <= vertical_pitch
};

inline BeamAssignment assign_beam(const LaserModel& model, const Eigen::Vector3d& p) {
  BeamAssignment a;
  const double dxy = std::hypot(p.x(), p.y());
  const double phi = std::atan2(p.y(), p.x());
  a.col = model.column_of(phi);
  a.azimuth_offset = wrap_angle(phi - model.column_center(a.col));

  double best = std::numeric_limits<double>::infinity();
  double best_beam = 0.0;
  for (int i = 0; i < model.ring_count(); ++i) {
    const auto& r = model.rings[i];
    const double beam = std::tan(r.inclination) * dxy + r.height;
    const double res = p.z() - beam;
    if (std::abs(res) < std::abs(best)) {
      best = res;
      best_beam = beam;
      a.row = i;
    }
  }
  a.residual = best;

  double above = std::numeric_limits<double>::infinity();
  double below = std::numeric_limits<double>::infinity();
  for (int i = 0; i < model.ring_count(); ++i) {
    if (i == a.row) continue;
    const auto& r = model.rings[i];
    const double gap = std::tan(r.inclination) * dxy + r.height - best_beam;
    if (gap > 0.0) above = std::min(above, gap);
    else below = std::min(below, -gap);
  }
  double pitch = a.residual >= 0.0 ? above : below;
  if (!std::isfinite(pitch)) pitch = a.residual >= 0.0 ? below : above;
  a.vertical_pitch = pitch;
  a.assignable = std::abs(a.residual) <= pitch;
  return a;
}

// ---------------------------------------------------------------------------
// Model file: flat `key = value` lines, one `ring = theta h` per ring.
// ---------------------------------------------------------------------------

inline std::string format_laser_model(const LaserModel& m) {
  std::ostringstream out;
  out.precision(17);
  out << "# mistfuse laser model: ring = inclination_rad height_m\n";
  out << "azimuth_bins = " << m.azimuth_bins << '\n';
  out << "azimuth_origin = " << m.azimuth_origin << '\n';
  out << "use_corrected_backprojection = " << (m.use_corrected_backprojection ? "true" : "false") << '\n';
  out << "corrected_radicand = " << (m.corrected_radicand ? "true" : "false") << '\n';
  for (const auto& r : m.rings) out << "ring = " << r.inclination << ' ' << r.height << '\n';
  return out.str();
}

inline LaserModel parse_laser_model(std::istream& in, const std::string& name = "<stream>") {
  LaserModel m;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& why) {
    throw FormatError(name + ":" + std::to_string(lineno) + ": " + why);
  };
  auto parse_bool = [&](const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    fail("expected true/false, got '" + v + "'");
    return false;
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (eq == std::string::npos) fail("expected key = value");
    std::istringstream key_ss(line.substr(0, eq));
    std::string key;
    key_ss >> key;
    std::istringstream val(line.substr(eq + 1));
    if (key == "ring") {
      LaserRing r;
      if (!(val >> r.inclination >> r.height)) fail("ring needs `inclination height`");
      m.rings.push_back(r);
    } else if (key == "azimuth_bins") {
      if (!(val >> m.azimuth_bins)) fail("bad azimuth_bins");
    } else if (key == "azimuth_origin") {
      if (!(val >> m.azimuth_origin)) fail("bad azimuth_origin");
    } else if (key == "use_corrected_backprojection" || key == "corrected_radicand") {
      std::string v;
      val >> v;
      (key == "corrected_radicand" ? m.corrected_radicand : m.use_corrected_backprojection) = parse_bool(v);
    } else {
      fail("unknown key '" + key + "'");
    }
  }
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(name + ": " + e.what());
  }
  return m;
}

inline LaserModel read_laser_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PathError("cannot open " + path.string());
  return parse_laser_model(in, path.string());
}

inline void write_laser_model(const std::filesystem::path& path, const LaserModel& m) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw PathError("cannot write " + path.string());
  out << format_laser_model(m);
}

}  // namespace mistfuse

#endif  // MISTFUSE_RANGESIM_LASER_MODEL_HPP
