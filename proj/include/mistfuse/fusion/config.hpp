// mistfuse - header-only toolkit for random-object LiDAR perturbation
// SPDX-License-Identifier: MIT
//
// Attack decision variables: fusion mode, density limits and spray angle.

#ifndef MISTFUSE_FUSION_CONFIG_HPP
#define MISTFUSE_FUSION_CONFIG_HPP

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "mistfuse/cloudcore/keyvalue.hpp"

namespace mistfuse {

enum class FusionMode { head_tail_side, body_side, two_sides, corner_point };

inline constexpr std::array<FusionMode, 4> kAllFusionModes = {
    FusionMode::head_tail_side, FusionMode::body_side, FusionMode::two_sides, FusionMode::corner_point};

inline std::string to_string(FusionMode m) {
  switch (m) {
    case FusionMode::head_tail_side: return "head_tail_side";
    case FusionMode::body_side: return "body_side";
    case FusionMode::two_sides: return "two_sides";
    case FusionMode::corner_point: return "corner_point";
  }
  return "?";
}

inline FusionMode parse_fusion_mode(std::string_view s) {
  for (auto m : kAllFusionModes) {
    if (s == to_string(m)) return m;
  }
  throw std::invalid_argument("unknown fusion mode '" + std::string(s) + "'");
}

inline bool needs_two_faces(FusionMode m) {
  return m == FusionMode::two_sides || m == FusionMode::corner_point;
}

/// Dataset-specific clamps on the density limits.
enum class DatasetProfile { generic, kitti, nuscenes };

inline DatasetProfile parse_dataset_profile(std::string_view s) {
  if (s == "generic") return DatasetProfile::generic;
  if (s == "kitti") return DatasetProfile::kitti;
  if (s == "nuscenes") return DatasetProfile::nuscenes;
  throw std::invalid_argument("unknown dataset '" + std::string(s) + "'");
}

inline std::string to_string(DatasetProfile d) {
  switch (d) {
    case DatasetProfile::kitti: return "kitti";
    case DatasetProfile::nuscenes: return "nuscenes";
    default: return "generic";
  }
}

struct FusionConfig {
  static constexpr double kMaxDensity = 0.5;
  static constexpr double kKittiMaxVertical = 0.004;
  static constexpr double kMaxSprayDeg = 40.0;

  FusionMode mode = FusionMode::body_side;
  double d_h = 0.5;  // fraction of the azimuth pitch
  double d_v = 0.5;  // fraction of the local ring pitch
  double spray_angle_deg = 0.0;
  DatasetProfile dataset = DatasetProfile::generic;

  bool operator==(const FusionConfig&) const = default;

  void validate() const {
    if (!(d_h >= 0.0 && d_h <= kMaxDensity)) throw std::invalid_argument("FusionConfig: d_h outside [0, 0.5]");
    if (!(d_v >= 0.0 && d_v <= kMaxDensity)) throw std::invalid_argument("FusionConfig: d_v outside [0, 0.5]");
    if (!(spray_angle_deg >= -kMaxSprayDeg && spray_angle_deg <= kMaxSprayDeg)) {
      throw std::invalid_argument("FusionConfig: spray angle outside [-40, 40] degrees");
    }
  }

  /// Vertical limit after the dataset clamp (KITTI caps d_v at 0.004).
  double effective_d_v() const {
    return dataset == DatasetProfile::kitti ? std::min(d_v, kKittiMaxVertical) : d_v;
  }
};

inline std::string format_fusion_config(const FusionConfig& c) {
  std::ostringstream out;
  out.precision(17);
  out << "mode = " << to_string(c.mode) << "\nd_h = " << c.d_h << "\nd_v = " << c.d_v
      << "\nspray_angle_deg = " << c.spray_angle_deg << "\ndataset = " << to_string(c.dataset) << '\n';
  return out.str();
}

/// Reads `mode`, `d_h`, `d_v`, `spray_angle_deg` and optional `dataset`;
/// keys missing from `kv` keep the values in `base`.
inline FusionConfig fusion_config_from(const KeyValues& kv, FusionConfig base = {}) {
  try {
    if (kv.has("mode")) base.mode = parse_fusion_mode(kv.get("mode"));
    if (kv.has("dataset")) base.dataset = parse_dataset_profile(kv.get("dataset"));
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  base.d_h = kv.get_double_or("d_h", base.d_h);
  base.d_v = kv.get_double_or("d_v", base.d_v);
  base.spray_angle_deg = kv.get_double_or("spray_angle_deg", base.spray_angle_deg);
  base.validate();
  return base;
}

inline FusionConfig read_fusion_config(const std::filesystem::path& path) {
  return fusion_config_from(KeyValues::read(path));
}

}  // namespace mistfuse

#endif  // MISTFUSE_FUSION_CONFIG_HPP
