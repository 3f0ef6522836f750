// mistfuse - header-only toolkit for random-object LiDAR perturbation
// SPDX-License-Identifier: MIT
//
// Detector output and its JSON interchange file:
//   {"frame_id": ..., "detector": ...,
//    "boxes": [{"cx","cy","cz","l","w","h","yaw","score","class"}, ...]}

#ifndef MISTFUSE_EVAL_DETECTION_HPP
#define MISTFUSE_EVAL_DETECTION_HPP

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mistfuse/cloudcore/io.hpp"
#include "mistfuse/cloudcore/point_cloud.hpp"

namespace mistfuse {

struct Detection {
  BoundingBox3D box;
  double confidence = 0.0;
};

struct DetectionSet {
  std::string frame_id;
  std::string detector_name;
  std::vector<Detection> detections;
};

/// Class gate for matching: "car" and "vehicle", case-insensitive.
inline bool is_vehicle_label(const std::string& label) {
  std::string l = label;
  std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return std::tolower(c); });
  return l == "car" || l == "vehicle";
}

inline nlohmann::json to_json(const DetectionSet& set) {
  nlohmann::json boxes = nlohmann::json::array();
  for (const auto& d : set.detections) {
    const auto& b = d.box;
    boxes.push_back({{"cx", b.center.x()}, {"cy", b.center.y()}, {"cz", b.center.z()},
                     {"l", b.dims.x()},    {"w", b.dims.y()},    {"h", b.dims.z()},
                     {"yaw", b.yaw},       {"score", d.confidence}, {"class", b.label}});
  }
  return {{"frame_id", set.frame_id}, {"detector", set.detector_name}, {"boxes", boxes}};
}

/// Throws FormatError on missing fields, degenerate boxes or scores outside [0, 1].
inline DetectionSet detection_set_from_json(const nlohmann::json& j, const std::string& name = "<json>") {
  try {
    DetectionSet set;
    set.frame_id = j.at("frame_id").get<std::string>();
    set.detector_name = j.at("detector").get<std::string>();
    for (const auto& r : j.at("boxes")) {
      Detection d;
      d.box = BoundingBox3D({r.at("cx").get<double>(), r.at("cy").get<double>(), r.at("cz").get<double>()},
                            {r.at("l").get<double>(), r.at("w").get<double>(), r.at("h").get<double>()},
                            r.at("yaw").get<double>(), r.at("class").get<std::string>());
      d.confidence = r.at("score").get<double>();
      if (!d.box.valid()) throw FormatError(name + ": degenerate box");
      if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) throw FormatError(name + ": score outside [0, 1]");
      set.detections.push_back(std::move(d));
    }
    return set;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(name + ": " + e.what());
  }
}

inline DetectionSet read_detections(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PathError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return detection_set_from_json(j, path.string());
}

inline void write_detections(const std::filesystem::path& path, const DetectionSet& set) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw PathError("cannot write " + path.string());
  out << to_json(set).dump(2) << '\n';
}

}  // namespace mistfuse

#endif  // MISTFUSE_EVAL_DETECTION_HPP
