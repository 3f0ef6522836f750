// mistfuse - header-only toolkit for random-object LiDAR perturbation
// SPDX-License-Identifier: MIT
//
// Sensor-model recovery from raw captures: split a capture-ordered cloud
// into rings at azimuth wrap-arounds, then fit z = tan(theta) d_xy + h per
// ring by least squares.

#ifndef MISTFUSE_RANGESIM_CALIBRATION_HPP
#define MISTFUSE_RANGESIM_CALIBRATION_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "mistfuse/cloudcore/point_cloud.hpp"
#include "mistfuse/rangesim/laser_model.hpp"

namespace mistfuse {

class UnfittableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline int count_rings(const PointCloud& cloud) {
  if (!cloud.ring || cloud.ring->empty()) return 0;
  return *std::max_element(cloud.ring->begin(), cloud.ring->end()) + 1;
}

/**
 * @brief Tag each point with its ring by finding azimuth wrap-arounds.
 *
 * The sweep direction is taken from the majority sign of consecutive
 * azimuth steps, so clockwise and counter-clockwise captures both work. A
 * new ring starts wherever the azimuth jumps backwards by more than pi
 * against that direction. Clouds that already carry a ring channel are
 * returned unchanged.
 */
inline PointCloud scan_unfold(const PointCloud& cloud) {
  if (cloud.ring) return cloud;
  PointCloud out = cloud;
  out.ring.emplace(cloud.size(), 0);
  if (cloud.size() < 2) return out;

  std::vector<double> phi(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) phi[i] = std::atan2(cloud[i].y(), cloud[i].x());

  long forward = 0;
  for (std::size_t i = 1; i < phi.size(); ++i) {
    const double step = wrap_angle(phi[i] - phi[i - 1]);
    forward += step > 0.0 ? 1 : (step < 0.0 ? -1 : 0);
  }
  const double sense = forward >= 0 ? 1.0 : -1.0;

  int ring = 0;
  for (std::size_t i = 1; i < phi.size(); ++i) {
    if (sense * (phi[i] - phi[i - 1]) < -std::numbers::pi) ++ring;
    (*out.ring)[i] = ring;
  }
  return out;
}

/// Minimum points per ring accepted by fit_laser_model.
inline constexpr std::size_t kMinPointsPerRing = 10;

struct RingFit {
  int ring = 0;
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t points = 0;
  double rms_residual = 0.0;
};

/// Least-squares line z = slope * d_xy + intercept over one ring's points.
inline RingFit fit_ring(int ring, const std::vector<Eigen::Vector3d>& pts) {
  if (pts.size() < kMinPointsPerRing) {
    throw UnfittableError("ring " + std::to_string(ring) + ": " + std::to_string(pts.size()) +
                          " points, need at least " + std::to_string(kMinPointsPerRing));
  }
  const double n = static_cast<double>(pts.size());
  double mx = 0.0, mz = 0.0;
  for (const auto& p : pts) {
    mx += std::hypot(p.x(), p.y());
    mz += p.z();
  }
  mx /= n;
  mz /= n;
  double sxx = 0.0, sxz = 0.0;
  for (const auto& p : pts) {
    const double dx = std::hypot(p.x(), p.y()) - mx;
    sxx += dx * dx;
    sxz += dx * (p.z() - mz);
  }
  const double scale = 1e-9 * std::max(1.0, std::abs(mx));
  if (sxx <= n * scale * scale) {
    throw UnfittableError("ring " + std::to_string(ring) + ": rank-deficient fit, all points at one d_xy");
  }
  RingFit f;
  f.ring = ring;
  f.points = pts.size();
  f.slope = sxz / sxx;
  f.intercept = mz - f.slope * mx;
  double ss = 0.0;
  for (const auto& p : pts) {
    const double r = p.z() - (f.slope * std::hypot(p.x(), p.y()) + f.intercept);
    ss += r * r;
  }
  f.rms_residual = std::sqrt(ss / n);
  return f;
}

/**
 * @brief Fit one (inclination, height) pair per ring of a ring-tagged cloud.
 *
 * Rings in the result are sorted by decreasing inclination. Throws
 * UnfittableError when a ring has too few points, is rank-deficient, or
 * the fitted parameters violate the LaserModel invariants.
 */
inline LaserModel fit_laser_model(const PointCloud& cloud, int azimuth_bins = LaserModel::kDefaultAzimuthBins) {
  if (!cloud.ring) throw std::invalid_argument("fit_laser_model: cloud has no ring channel");
  std::map<int, std::vector<Eigen::Vector3d>> by_ring;
  for (std::size_t i = 0; i < cloud.size(); ++i) by_ring[(*cloud.ring)[i]].push_back(cloud[i].xyz);
  if (by_ring.empty()) throw UnfittableError("fit_laser_model: empty cloud");

  LaserModel m;
  m.azimuth_bins = azimuth_bins;
  for (const auto& [ring, pts] : by_ring) {
    const RingFit f = fit_ring(ring, pts);
    m.rings.push_back({std::atan(f.slope), f.intercept});
  }
  std::sort(m.rings.begin(), m.rings.end(),
            [](const LaserRing& a, const LaserRing& b) { return a.inclination > b.inclination; });
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw UnfittableError(std::string("fit_laser_model: ") + e.what());
  }
  return m;
}

}  // namespace mistfuse

#endif  // MISTFUSE_RANGESIM_CALIBRATION_HPP
