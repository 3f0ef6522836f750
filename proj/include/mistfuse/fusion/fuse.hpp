// mistfuse - header-only toolkit for random-object LiDAR perturbation
// SPDX-License-Identifier: MIT
//
// Density gating of object points and occlusion-aware fusion of an object
// sequence onto a target vehicle.

#ifndef MISTFUSE_FUSION_FUSE_HPP
#define MISTFUSE_FUSION_FUSE_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "mistfuse/cloudcore/point_cloud.hpp"
#include "mistfuse/fusion/config.hpp"
#include "mistfuse/fusion/placement.hpp"
#include "mistfuse/objectgen/sequence.hpp"
#include "mistfuse/rangesim/laser_model.hpp"
#include "mistfuse/rangesim/range_image.hpp"

namespace mistfuse {

/**
 * @brief Which object points a simulated beam would see.
 *
 * A point is kept iff it is assignable to a ring and
 *   |height residual|   <= d_v * local ring pitch
 *   |azimuth offset|    <= d_h * (2 pi / W)
 * where the residual and pitch are measured at the point's d_xy (see
 * assign_beam). The kept set only grows as either limit grows; 0.5 on both
 * axes keeps every point inside its cell's half-pitch window.
 */
inline std::vector<bool> density_gate_mask(const PointCloud& object, const LaserModel& model, double d_h,
                                           double d_v) {
  if (!(d_h >= 0.0 && d_h <= FusionConfig::kMaxDensity) || !(d_v >= 0.0 && d_v <= FusionConfig::kMaxDensity)) {
    throw std::invalid_argument("density_gate: densities must lie in [0, 0.5]");
  }
  model.validate();
  const double h_limit = d_h * model.azimuth_pitch();
  std::vector<bool> keep(object.size(), false);
  for (std::size_t i = 0; i < object.size(); ++i) {
    const Eigen::Vector3d& p = object[i].xyz;
    if (!(p.norm() > kMinProjectableRange)) continue;
    const BeamAssignment a = assign_beam(model, p);
    if (!a.assignable) continue;
    // 0 * inf is NaN for single-ring models.
    const double v_limit = d_v == 0.0 ? 0.0 : d_v * a.vertical_pitch;
    keep[i] = std::abs(a.residual) <= v_limit && std::abs(a.azimuth_offset) <= h_limit;
  }
  return keep;
}

inline PointCloud density_gate(const PointCloud& object, const LaserModel& model, double d_h, double d_v) {
  const auto keep = density_gate_mask(object, model, d_h, d_v);
  PointCloud out;
  out.frame_id = object.frame_id;
  for (std::size_t i = 0; i < object.size(); ++i) {
    if (keep[i]) out.points.push_back(object[i]);
  }
  return out;
}

/// Re-render a cloud through the sensor model (project then backproject).
inline PointCloud render(const PointCloud& cloud, const LaserModel& model) {
  PointCloud out = backproject(project(cloud, model));
  out.frame_id = cloud.frame_id;
  return out;
}

enum class PointSource : std::uint8_t { scene, object };

struct PointOrigin {
  PointSource source = PointSource::scene;
  std::size_t index = 0;  // into the scene, or into the gated object cloud
};

struct FusedFrame {
  PointCloud cloud;
  std::vector<PointOrigin> origin;  // one per output point
  std::size_t object_points_pre_gate = 0;
  std::size_t object_points_post_gate = 0;
  std::size_t object_points_visible = 0;  // survived the z-buffer
  std::size_t dropped = 0;

  bool object_empty() const { return object_points_post_gate == 0; }
};

/// Render scene + (already placed and gated) object points into one frame.
inline FusedFrame render_fused(const PointCloud& scene, const PointCloud& gated_object, const LaserModel& model) {
  const PointCloud merged = concat(PointCloud(scene.points, scene.frame_id), PointCloud(gated_object.points));
  const RangeImage img = project(merged, model);
  FusedFrame out;
  out.cloud = backproject(img);
  out.cloud.frame_id = scene.frame_id;
  out.dropped = img.dropped;
  out.object_points_post_gate = gated_object.size();
  for (auto s : backprojected_sources(img)) {
    const auto i = static_cast<std::size_t>(s);
    if (i < scene.size()) {
      out.origin.push_back({PointSource::scene, i});
    } else {
      out.origin.push_back({PointSource::object, i - scene.size()});
      ++out.object_points_visible;
    }
  }
  return out;
}

/// Object copies for one sequence frame, positioned on every anchor but not yet gated.
inline PointCloud place_on_anchors(const PointCloud& object_frame, const AnchorSet& anchors, double spray_deg) {
  PointCloud placed;
  if (object_frame.empty()) return placed;
  for (std::size_t a = 0; a < anchors.anchors.size(); ++a) {
    // Alignment comes from the unrotated frame so the spray angle is not undone.
    const double yaw = alignment_yaw(object_frame, anchors.tangent_yaws[a]) + spray_deg * std::numbers::pi / 180.0;
    const PointCloud copy = attach_object(object_frame, anchors.anchors[a], yaw);
    placed.points.insert(placed.points.end(), copy.points.begin(), copy.points.end());
  }
  return placed;
}

struct FusionResult {
  AnchorSet anchors;
  std::vector<FusedFrame> frames;  // one per sequence frame
};

/**
 * @brief Attach each sequence frame to the target and re-render.
 *
 * Per frame: spray rotation and placement at every anchor, density gate,
 * merge after the scene points, keep-nearest projection, back-projection.
 * Throws InfeasibleModeError if the mode has no anchor for this box.
 */
inline FusionResult fuse(const PointCloud& scene, const SequenceSample& object_seq, const BoundingBox3D& box,
                         const FusionConfig& cfg, const LaserModel& model,
                         const Eigen::Vector3d& sensor_origin = Eigen::Vector3d::Zero()) {
  cfg.validate();
  FusionResult result;
  result.anchors = select_anchor(box, sensor_origin, cfg.mode);
  for (const auto& frame : object_seq.frames) {
    const PointCloud placed = place_on_anchors(frame, result.anchors, cfg.spray_angle_deg);
    const PointCloud gated = density_gate(placed, model, cfg.d_h, cfg.effective_d_v());
    FusedFrame fused = render_fused(scene, gated, model);
    fused.object_points_pre_gate = placed.size();
    result.frames.push_back(std::move(fused));
  }
  return result;
}

}  // namespace mistfuse

#endif  // MISTFUSE_FUSION_FUSE_HPP
