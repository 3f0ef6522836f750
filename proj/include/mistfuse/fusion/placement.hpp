// mistfuse - header-only toolkit for random-object LiDAR perturbation
// SPDX-License-Identifier: MIT
//
// Where and how an object is attached to a target box: anchor selection per
// fusion mode, half-height placement onto the anchor, and spray rotation.

#ifndef MISTFUSE_FUSION_PLACEMENT_HPP
#define MISTFUSE_FUSION_PLACEMENT_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "mistfuse/cloudcore/point_cloud.hpp"
#include "mistfuse/fusion/config.hpp"

namespace mistfuse {

class InfeasibleModeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vertical side faces of a box, named in the box frame (x = heading).
enum class BoxFace { front, rear, left, right };

inline std::string to_string(BoxFace f) {
  switch (f) {
    case BoxFace::front: return "front";
    case BoxFace::rear: return "rear";
    case BoxFace::left: return "left";
    case BoxFace::right: return "right";
  }
  return "?";
}

inline bool is_head_tail(BoxFace f) { return f == BoxFace::front || f == BoxFace::rear; }

namespace detail {

inline Eigen::Vector2d face_normal_box(BoxFace f) {
  switch (f) {
    case BoxFace::front: return {1.0, 0.0};
    case BoxFace::rear: return {-1.0, 0.0};
    case BoxFace::left: return {0.0, 1.0};
    case BoxFace::right: return {0.0, -1.0};
  }
  return {0.0, 0.0};
}

/// Midpoint of the face's top edge, box frame.
inline Eigen::Vector3d face_top_mid_box(const BoundingBox3D& box, BoxFace f) {
  const Eigen::Vector2d n = face_normal_box(f);
  return {n.x() * 0.5 * box.length(), n.y() * 0.5 * box.width(), 0.5 * box.height()};
}

}  // namespace detail

struct FaceVisibility {
  BoxFace face;
  double dot;  // outward normal . unit(face center -> sensor), horizontal
};

/// All four side faces with their facing score; a face faces the sensor iff dot > 0.
inline std::vector<FaceVisibility> face_visibility(const BoundingBox3D& box, const Eigen::Vector3d& sensor) {
  std::vector<FaceVisibility> out;
  const double c = std::cos(box.yaw), s = std::sin(box.yaw);
  for (BoxFace f : {BoxFace::front, BoxFace::rear, BoxFace::left, BoxFace::right}) {
    const Eigen::Vector2d nb = detail::face_normal_box(f);
    const Eigen::Vector2d n(c * nb.x() - s * nb.y(), s * nb.x() + c * nb.y());
    const Eigen::Vector3d fc = box.from_box_frame({nb.x() * 0.5 * box.length(), nb.y() * 0.5 * box.width(), 0.0});
    Eigen::Vector3d to_sensor = sensor - fc;
    const double len = to_sensor.norm();
    const double dot = len > 0.0 ? n.dot(to_sensor.head<2>()) / len : 0.0;
    out.push_back({f, dot});
  }
  return out;
}

struct AnchorSet {
  std::vector<Eigen::Vector3d> anchors;  // scene frame, on the top rectangle
  std::vector<BoxFace> facing_faces;     // strongest first
  /// Per anchor: heading of the attached surface's horizontal tangent.
  std::vector<double> tangent_yaws;
};

/// Faces toward the sensor, strongest first; exact ties prefer front/rear.
inline std::vector<BoxFace> facing_faces(const BoundingBox3D& box, const Eigen::Vector3d& sensor) {
  auto vis = face_visibility(box, sensor);
  std::erase_if(vis, [](const FaceVisibility& v) { return !(v.dot > 0.0); });
  std::stable_sort(vis.begin(), vis.end(), [](const FaceVisibility& a, const FaceVisibility& b) {
    if (a.dot != b.dot) return a.dot > b.dot;
    return is_head_tail(a.face) && !is_head_tail(b.face);
  });
  std::vector<BoxFace> out;
  for (const auto& v : vis) out.push_back(v.face);
  return out;
}

/**
 * @brief Anchor point(s) B on the box's top rectangle for a fusion mode.
 *
 * head_tail_side / body_side use the top-edge midpoint of the facing
 * front-or-rear / lateral face. two_sides uses both facing midpoints and
 * corner_point the top corner they share; both need exactly two facing
 * faces. Throws InfeasibleModeError when the required face is not visible
 * and std::invalid_argument when the sensor is inside the box.
 */
inline AnchorSet select_anchor(const BoundingBox3D& box, const Eigen::Vector3d& sensor, FusionMode mode) {
  if (!box.valid()) throw std::invalid_argument("select_anchor: degenerate box");
  if (box.contains(sensor)) throw std::invalid_argument("select_anchor: sensor inside the box");
  AnchorSet set;
  set.facing_faces = facing_faces(box, sensor);
  const auto& faces = set.facing_faces;
  if (faces.empty()) throw InfeasibleModeError("select_anchor: no side face toward the sensor");

  auto tangent_of = [&](BoxFace f) {
    return wrap_angle(is_head_tail(f) ? box.yaw + std::numbers::pi / 2 : box.yaw);
  };
  auto add_face = [&](BoxFace f) {
    set.anchors.push_back(box.from_box_frame(detail::face_top_mid_box(box, f)));
    set.tangent_yaws.push_back(tangent_of(f));
  };

  switch (mode) {
    case FusionMode::head_tail_side:
    case FusionMode::body_side: {
      const bool want_head_tail = mode == FusionMode::head_tail_side;
      auto it = std::find_if(faces.begin(), faces.end(),
                             [&](BoxFace f) { return is_head_tail(f) == want_head_tail; });
      if (it == faces.end()) {
        throw InfeasibleModeError("select_anchor: " + to_string(mode) + " needs a " +
                                  (want_head_tail ? "front/rear" : "lateral") + " face toward the sensor");
      }
      add_face(*it);
      break;
    }
    case FusionMode::two_sides:
    case FusionMode::corner_point: {
      if (faces.size() != 2) {
        throw InfeasibleModeError("select_anchor: " + to_string(mode) + " needs two faces toward the sensor, found " +
                                  std::to_string(faces.size()));
      }
      if (mode == FusionMode::two_sides) {
        add_face(faces[0]);
        add_face(faces[1]);
      } else {
        const Eigen::Vector2d n = detail::face_normal_box(faces[0]) + detail::face_normal_box(faces[1]);
        const Eigen::Vector3d corner(n.x() * 0.5 * box.length(), n.y() * 0.5 * box.width(), 0.5 * box.height());
        set.anchors.push_back(box.from_box_frame(corner));
        set.tangent_yaws.push_back(wrap_angle(box.yaw + std::atan2(corner.y(), corner.x()) + std::numbers::pi / 2));
      }
      break;
    }
  }
  return set;
}

/// Heading of the dominant horizontal spread (0 for isotropic or single-point clouds).
inline double principal_horizontal_yaw(const PointCloud& cloud) {
  const Eigen::Vector3d c = centroid(cloud);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& p : cloud) {
    const double dx = p.x() - c.x(), dy = p.y() - c.y();
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxy == 0.0 && sxx == syy) return 0.0;
  return 0.5 * std::atan2(2.0 * sxy, sxx - syy);
}

/// Yaw that turns the principal horizontal axis onto `tangent_yaw`, in (-pi/2, pi/2].
inline double alignment_yaw(const PointCloud& object, double tangent_yaw) {
  double a = wrap_angle(tangent_yaw - principal_horizontal_yaw(object));
  if (a > std::numbers::pi / 2) a -= std::numbers::pi;
  if (a <= -std::numbers::pi / 2) a += std::numbers::pi;
  return a;
}

/// Half the vertical extent of the object.
inline double half_height(const PointCloud& object) {
  if (object.empty()) throw std::invalid_argument("half_height: empty object");
  double lo = object[0].z(), hi = lo;
  for (const auto& p : object) {
    lo = std::min(lo, p.z());
    hi = std::max(hi, p.z());
  }
  return 0.5 * (hi - lo);
}

/// Rotate about the vertical axis through the centroid, then translate so
/// that A = centroid + (0, 0, half_height) lands exactly on the anchor.
inline PointCloud attach_object(const PointCloud& object, const Eigen::Vector3d& anchor, double yaw) {
  if (object.empty()) throw std::invalid_argument("attach_object: empty object");
  const Eigen::Vector3d o = centroid(object);
  const Eigen::Vector3d a = o + Eigen::Vector3d(0.0, 0.0, half_height(object));
  const RigidTransform spin = RigidTransform::yaw_about(yaw, o);
  return transform(object, RigidTransform::translation(anchor - a) * spin);
}

/// Align the object's principal horizontal axis with the attached surface
/// and move its point A onto the anchor B.
inline PointCloud place_object(const PointCloud& object, const Eigen::Vector3d& anchor, double tangent_yaw) {
  return attach_object(object, anchor, alignment_yaw(object, tangent_yaw));
}

/// Spray-direction rotation about the object's vertical centroid axis.
inline PointCloud rotate_spray(const PointCloud& object, double angle_deg) {
  if (!(angle_deg >= -FusionConfig::kMaxSprayDeg && angle_deg <= FusionConfig::kMaxSprayDeg)) {
    throw std::invalid_argument("rotate_spray: angle outside [-40, 40] degrees");
  }
  if (object.empty() || angle_deg == 0.0) return object;
  return transform(object, RigidTransform::yaw_about(angle_deg * std::numbers::pi / 180.0, centroid(object)));
}

}  // namespace mistfuse

#endif  // MISTFUSE_FUSION_PLACEMENT_HPP
