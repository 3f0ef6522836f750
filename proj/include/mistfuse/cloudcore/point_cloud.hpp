// mistfuse - header-only toolkit for random-object LiDAR perturbation
// SPDX-License-Identifier: MIT
//
// Core geometry types: points, clouds, boxes and rigid transforms.

#ifndef MISTFUSE_CLOUDCORE_POINT_CLOUD_HPP
#define MISTFUSE_CLOUDCORE_POINT_CLOUD_HPP

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace mistfuse {

// ============================================================================
// Point / PointCloud
// ============================================================================

/// Sensor-frame point (x forward, y left, z up) with reflectance in [0, 1].
struct Point {
  Eigen::Vector3d xyz = Eigen::Vector3d::Zero();
  double intensity = 0.0;

  Point() = default;
  Point(double x, double y, double z, double i = 0.0) : xyz(x, y, z), intensity(i) {}
  Point(const Eigen::Vector3d& p, double i) : xyz(p), intensity(i) {}

  double x() const { return xyz.x(); }
  double y() const { return xyz.y(); }
  double z() const { return xyz.z(); }

  bool operator==(const Point& o) const { return xyz == o.xyz && intensity == o.intensity; }
};

/**
 * @brief Ordered point collection with an optional per-point ring channel.
 *
 * Order is meaningful: raw captures keep firing order, which scan unfolding
 * relies on. The ring channel, when present, has exactly one entry per point.
 */
struct PointCloud {
  std::vector<Point> points;
  std::string frame_id;
  std::optional<std::vector<int>> ring;

  PointCloud() = default;
  explicit PointCloud(std::vector<Point> pts, std::string id = {})
      : points(std::move(pts)), frame_id(std::move(id)) {}

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  const Point& operator[](std::size_t i) const { return points[i]; }
  Point& operator[](std::size_t i) { return points[i]; }

  auto begin() const { return points.begin(); }
  auto end() const { return points.end(); }

  bool operator==(const PointCloud& o) const {
    return points == o.points && frame_id == o.frame_id && ring == o.ring;
  }
};

inline Eigen::Vector3d centroid(const PointCloud& cloud) {
  if (cloud.empty()) throw std::invalid_argument("centroid: empty cloud");
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (const auto& p : cloud) sum += p.xyz;
  return sum / static_cast<double>(cloud.size());
}

/// Concatenate b after a. The ring channel survives only if both carry it.
inline PointCloud concat(const PointCloud& a, const PointCloud& b) {
  PointCloud out = a;
  out.points.insert(out.points.end(), b.points.begin(), b.points.end());
  if (a.ring && b.ring) {
    out.ring->insert(out.ring->end(), b.ring->begin(), b.ring->end());
  } else {
    out.ring.reset();
  }
  return out;
}

/// Wrap an angle into (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  a = std::fmod(a, kTwoPi);
  if (a <= -std::numbers::pi) a += kTwoPi;
  if (a > std::numbers::pi) a -= kTwoPi;
  return a;
}

// ============================================================================
// BoundingBox3D
// ============================================================================

/// Yawed box. center is the geometric center; dims are (length along heading,
/// width, height).
struct BoundingBox3D {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d dims = Eigen::Vector3d::Ones();
  double yaw = 0.0;
  std::string label = "Car";

  BoundingBox3D() = default;
  BoundingBox3D(const Eigen::Vector3d& c, const Eigen::Vector3d& d, double heading,
                std::string cls = "Car")
      : center(c), dims(d), yaw(wrap_angle(heading)), label(std::move(cls)) {}

  double length() const { return dims.x(); }
  double width() const { return dims.y(); }
  double height() const { return dims.z(); }
  double volume() const { return dims.prod(); }
  double top_z() const { return center.z() + 0.5 * dims.z(); }

  bool valid() const {
    return dims.allFinite() && (dims.array() > 0.0).all() && center.allFinite() &&
           std::isfinite(yaw);
  }

  /// Scene-frame point -> box frame (x along heading).
  Eigen::Vector3d to_box_frame(const Eigen::Vector3d& p) const {
    const double c = std::cos(yaw), s = std::sin(yaw);
    const Eigen::Vector3d d = p - center;
    return {c * d.x() + s * d.y(), -s * d.x() + c * d.y(), d.z()};
  }

  Eigen::Vector3d from_box_frame(const Eigen::Vector3d& q) const {
    const double c = std::cos(yaw), s = std::sin(yaw);
    return center + Eigen::Vector3d(c * q.x() - s * q.y(), s * q.x() + c * q.y(), q.z());
  }

  bool contains(const Eigen::Vector3d& p, double margin = 0.0) const {
    const Eigen::Vector3d q = to_box_frame(p);
    const Eigen::Vector3d half = 0.5 * dims + Eigen::Vector3d::Constant(margin);
    return std::abs(q.x()) <= half.x() && std::abs(q.y()) <= half.y() &&
           std::abs(q.z()) <= half.z();
  }
};

// ============================================================================
// RigidTransform
// ============================================================================

class RigidTransform {
 public:
  static constexpr double kOrthoTolerance = 1e-9;

  RigidTransform() = default;

  /// Throws std::invalid_argument unless rotation is orthonormal with det +1.
  RigidTransform(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
      : rotation_(rotation), translation_(translation) {
    const double ortho_err =
        (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    if (!rotation.allFinite() || !translation.allFinite() || ortho_err > kOrthoTolerance ||
        std::abs(rotation.determinant() - 1.0) > kOrthoTolerance) {
      throw std::invalid_argument("RigidTransform: rotation is not orthonormal with det=+1");
    }
  }

  static RigidTransform translation(const Eigen::Vector3d& t) {
    return {Eigen::Matrix3d::Identity(), t};
  }

  /// Rotation about the vertical axis through `pivot`.
  static RigidTransform yaw_about(double yaw, const Eigen::Vector3d& pivot = Eigen::Vector3d::Zero()) {
    const Eigen::Matrix3d r = Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    return {r, pivot - r * pivot};
  }

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation_ * p + translation_; }

  RigidTransform inverse() const {
    const Eigen::Matrix3d rt = rotation_.transpose();
    return {rt, -(rt * translation_)};
  }

  RigidTransform operator*(const RigidTransform& rhs) const {
    return {rotation_ * rhs.rotation_, rotation_ * rhs.translation_ + translation_};
  }

 private:
  Eigen::Matrix3d rotation_ = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation_ = Eigen::Vector3d::Zero();
};

// ============================================================================
// Operations
// ============================================================================

/// Apply a rigid transform. Intensity, ring and frame_id pass through.
inline PointCloud transform(const PointCloud& cloud, const RigidTransform& t) {
  PointCloud out = cloud;
  for (auto& p : out.points) p.xyz = t.apply(p.xyz);
  return out;
}

inline BoundingBox3D transform(const BoundingBox3D& box, const RigidTransform& t) {
  const Eigen::Vector3d heading = t.rotation() * Eigen::Vector3d(std::cos(box.yaw), std::sin(box.yaw), 0.0);
  return {t.apply(box.center), box.dims, std::atan2(heading.y(), heading.x()), box.label};
}

/// Points whose box-frame coordinates lie within dims/2 + margin on every axis.
inline PointCloud crop_to_box(const PointCloud& cloud, const BoundingBox3D& box, double margin = 0.0) {
  if (margin < 0.0) throw std::invalid_argument("crop_to_box: negative margin");
  PointCloud out;
  out.frame_id = cloud.frame_id;
  if (cloud.ring) out.ring.emplace();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (box.contains(cloud[i].xyz, margin)) {
      out.points.push_back(cloud[i]);
      if (cloud.ring) out.ring->push_back((*cloud.ring)[i]);
    }
  }
  return out;
}

inline std::size_t count_in_box(const PointCloud& cloud, const BoundingBox3D& box, double margin = 0.0) {
  std::size_t n = 0;
  for (const auto& p : cloud) n += box.contains(p.xyz, margin) ? 1 : 0;
  return n;
}

}  // namespace mistfuse

#endif  // MISTFUSE_CLOUDCORE_POINT_CLOUD_HPP
