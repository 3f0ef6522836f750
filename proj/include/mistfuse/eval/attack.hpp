// mistfuse - header-only toolkit for random-object LiDAR perturbation
// SPDX-License-Identifier: MIT
//
// Attack success scoring and occlusion ratios.

#ifndef MISTFUSE_EVAL_ATTACK_HPP
#define MISTFUSE_EVAL_ATTACK_HPP

#include <algorithm>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "mistfuse/cloudcore/point_cloud.hpp"
#include "mistfuse/eval/detection.hpp"
#include "mistfuse/eval/iou.hpp"

namespace mistfuse {

struct MatchThresholds {
  double confidence = 0.5;  // strictly greater
  double iou = 0.7;         // strictly greater
};

/**
 * @brief Greedy one-to-one matching of detections to vehicle boxes.
 *
 * Detections above the confidence gate are visited by descending score
 * (ties broken by box parameters, so input order never matters); each
 * takes the still-unmatched vehicle box with the highest IoU if that IoU
 * clears the gate. Returns, per ground-truth box, whether it was matched.
 * Non-vehicle ground truth is never matched.
 */
inline std::vector<bool> match_vehicles(const std::vector<Detection>& dets, const std::vector<BoundingBox3D>& gt,
                                        const MatchThresholds& th = {}) {
  std::vector<const Detection*> order;
  for (const auto& d : dets) {
    if (d.confidence > th.confidence && is_vehicle_label(d.box.label)) order.push_back(&d);
  }
  std::sort(order.begin(), order.end(), [](const Detection* a, const Detection* b) {
    if (a->confidence != b->confidence) return a->confidence > b->confidence;
    return detail::box_key(a->box) < detail::box_key(b->box);
  });
  std::vector<bool> matched(gt.size(), false);
  for (const Detection* d : order) {
    int best = -1;
    double best_iou = th.iou;
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (matched[g] || !is_vehicle_label(gt[g].label)) continue;
      const double v = iou3d(d->box, gt[g]);
      if (v > best_iou) {
        best_iou = v;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0) matched[static_cast<std::size_t>(best)] = true;
  }
  return matched;
}

struct AttackFrame {
  std::string frame_id;
  std::vector<BoundingBox3D> gt;
  DetectionSet baseline;
  DetectionSet adversarial;
};

struct VehicleOutcome {
  std::string frame_id;
  std::size_t gt_index = 0;
  bool initially_detected = false;
  bool still_detected = false;
  bool attacked() const { return initially_detected && !still_detected; }
};

struct AttackSummary {
  std::vector<VehicleOutcome> vehicles;
  std::size_t detected = 0;
  std::size_t successes = 0;
  /// Empty when no vehicle was initially detected.
  std::optional<double> asr;
};

/// Pooled over every vehicle of every frame:
/// ASR = attacked vehicles / initially detected vehicles.
inline AttackSummary attack_success(const std::vector<AttackFrame>& frames, const MatchThresholds& th = {}) {
  AttackSummary s;
  for (const auto& f : frames) {
    if (f.baseline.frame_id != f.adversarial.frame_id) {
      throw std::invalid_argument("attack_success: baseline/adversarial frame mismatch for " + f.frame_id);
    }
    const auto before = match_vehicles(f.baseline.detections, f.gt, th);
    const auto after = match_vehicles(f.adversarial.detections, f.gt, th);
    for (std::size_t g = 0; g < f.gt.size(); ++g) {
      if (!is_vehicle_label(f.gt[g].label)) continue;
      VehicleOutcome v{f.frame_id, g, before[g], after[g]};
      s.detected += v.initially_detected ? 1 : 0;
      s.successes += v.attacked() ? 1 : 0;
      s.vehicles.push_back(v);
    }
  }
  if (s.detected > 0) s.asr = static_cast<double>(s.successes) / static_cast<double>(s.detected);
  return s;
}

inline AttackSummary attack_success(const DetectionSet& baseline, const DetectionSet& adversarial,
                                    const std::vector<BoundingBox3D>& gt, const MatchThresholds& th = {}) {
  return attack_success({AttackFrame{baseline.frame_id, gt, baseline, adversarial}}, th);
}

/// 1 - after / before, clamped to [0, 1].
inline double occlusion_ratio(std::size_t before_count, std::size_t after_count) {
  if (before_count == 0) throw std::invalid_argument("occlusion_ratio: no vehicle points before occlusion");
  const double r = 1.0 - static_cast<double>(after_count) / static_cast<double>(before_count);
  return std::clamp(r, 0.0, 1.0);
}

inline double occlusion_ratio(const PointCloud& before, const PointCloud& after, const BoundingBox3D& box,
                              double margin = 0.0) {
  return occlusion_ratio(crop_to_box(before, box, margin).size(), crop_to_box(after, box, margin).size());
}

}  // namespace mistfuse

#endif  // MISTFUSE_EVAL_ATTACK_HPP
