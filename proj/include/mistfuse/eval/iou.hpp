// mistfuse - header-only toolkit for random-object LiDAR perturbation
// SPDX-License-Identifier: MIT
//
// Volumetric IoU of yawed 3D boxes: bird's-eye-view convex clipping times
// vertical overlap.

#ifndef MISTFUSE_EVAL_IOU_HPP
#define MISTFUSE_EVAL_IOU_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "mistfuse/cloudcore/point_cloud.hpp"

namespace mistfuse {

namespace detail {

using Vec2 = Eigen::Vector2d;

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

/// Footprint corners, counter-clockwise.
inline std::vector<Vec2> bev_corners(const BoundingBox3D& b) {
  const double c = std::cos(b.yaw), s = std::sin(b.yaw);
  const double hl = 0.5 * b.length(), hw = 0.5 * b.width();
  std::vector<Vec2> out;
  for (auto [u, v] : std::array<std::pair<double, double>, 4>{{{hl, hw}, {-hl, hw}, {-hl, -hw}, {hl, -hw}}}) {
    out.emplace_back(b.center.x() + c * u - s * v, b.center.y() + s * u + c * v);
  }
  return out;
}

/// Sutherland-Hodgman clip of `subject` against convex CCW `clip`.
inline std::vector<Vec2> clip_convex(std::vector<Vec2> subject, const std::vector<Vec2>& clip) {
  for (std::size_t e = 0; e < clip.size() && !subject.empty(); ++e) {
    const Vec2& a = clip[e];
    const Vec2& b = clip[(e + 1) % clip.size()];
    const Vec2 edge = b - a;
    auto side = [&](const Vec2& p) { return cross2(edge, p - a); };
    std::vector<Vec2> out;
    for (std::size_t i = 0; i < subject.size(); ++i) {
      const Vec2& p = subject[i];
      const Vec2& q = subject[(i + 1) % subject.size()];
      const double sp = side(p), sq = side(q);
      if (sp >= 0.0) out.push_back(p);
      if ((sp >= 0.0) != (sq >= 0.0)) {
        const double t = sp / (sp - sq);
        out.push_back(p + t * (q - p));
      }
    }
    subject = std::move(out);
  }
  return subject;
}

inline double polygon_area(const std::vector<Vec2>& poly) {
  if (poly.size() < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) twice += cross2(poly[i], poly[(i + 1) % poly.size()]);
  return 0.5 * std::abs(twice);
}

inline auto box_key(const BoundingBox3D& b) {
  return std::make_tuple(b.center.x(), b.center.y(), b.center.z(), b.dims.x(), b.dims.y(), b.dims.z(), b.yaw);
}

}  // namespace detail

inline double bev_intersection_area(const BoundingBox3D& a, const BoundingBox3D& b) {
  return detail::polygon_area(detail::clip_convex(detail::bev_corners(a), detail::bev_corners(b)));
}

/// Intersection volume over union volume. Throws std::invalid_argument on
/// a box with a non-positive dimension.
inline double iou3d(const BoundingBox3D& a, const BoundingBox3D& b) {
  if (!a.valid() || !b.valid()) throw std::invalid_argument("iou3d: degenerate box");
  // Fixed argument order makes the result exactly symmetric.
  const bool swap = detail::box_key(b) < detail::box_key(a);
  const BoundingBox3D& p = swap ? b : a;
  const BoundingBox3D& q = swap ? a : b;

  const double overlap_z = std::min(p.top_z(), q.top_z()) -
                           std::max(p.center.z() - 0.5 * p.height(), q.center.z() - 0.5 * q.height());
  if (overlap_z <= 0.0) return 0.0;
  const double inter = bev_intersection_area(p, q) * overlap_z;
  const double uni = p.volume() + q.volume() - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

}  // namespace mistfuse

#endif  // MISTFUSE_EVAL_IOU_HPP
