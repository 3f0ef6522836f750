// Synthetic scenes and sensor captures shared by the unit, integration and
// acceptance suites.

#ifndef MISTFUSE_TESTS_FIXTURES_HPP
#define MISTFUSE_TESTS_FIXTURES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "mistfuse/mistfuse.hpp"

namespace fixture {

using namespace mistfuse;

/// Point at along-beam range `range` on the beam of (row, col), fired from
/// the ring's own origin (0, 0, h).
inline Eigen::Vector3d on_beam(const LaserModel& m, int row, int col, double range) {
  const auto& r = m.rings[row];
  const double phi = m.column_center(col);
  const double ct = std::cos(r.inclination), st = std::sin(r.inclination);
  return {range * ct * std::cos(phi), range * ct * std::sin(phi), range * st + r.height};
}

/// `count` points on distinct random cells of `m`, ranges uniform in [lo, hi].
inline PointCloud beam_cloud(const LaserModel& m, std::size_t count, double lo, double hi, std::uint64_t seed) {
  const std::size_t cells = static_cast<std::size_t>(m.ring_count()) * m.azimuth_bins;
  std::vector<std::uint32_t> ids(cells);
  for (std::size_t i = 0; i < cells; ++i) ids[i] = static_cast<std::uint32_t>(i);
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  std::uniform_real_distribution<double> range(lo, hi), refl(0.0, 1.0);
  PointCloud c;
  for (std::size_t k = 0; k < std::min(count, cells); ++k) {
    const int row = static_cast<int>(ids[k] / m.azimuth_bins);
    const int col = static_cast<int>(ids[k] % m.azimuth_bins);
    c.points.emplace_back(on_beam(m, row, col, range(rng)), refl(rng));
  }
  return c;
}

/// Model with non-coincident origins: heights ramp linearly to `max_height`.
inline LaserModel offset_model(int rings, double top, double bottom, double max_height, int bins) {
  LaserModel m = LaserModel::uniform(rings, top, bottom, bins);
  for (int i = 0; i < rings; ++i) m.rings[i].height = max_height * i / std::max(1, rings - 1);
  m.use_corrected_backprojection = true;
  m.corrected_radicand = true;
  return m;
}

/// Ray / box slab test in the box frame; returns the entry distance or +inf.
inline double ray_box(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir, const BoundingBox3D& b) {
  const Eigen::Vector3d o = b.to_box_frame(origin);
  const double c = std::cos(b.yaw), s = std::sin(b.yaw);
  const Eigen::Vector3d d(c * dir.x() + s * dir.y(), -s * dir.x() + c * dir.y(), dir.z());
  double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    const double half = 0.5 * b.dims[k];
    if (std::abs(d[k]) < 1e-15) {
      if (std::abs(o[k]) > half) return std::numeric_limits<double>::infinity();
      continue;
    }
    double a = (-half - o[k]) / d[k], e = (half - o[k]) / d[k];
    if (a > e) std::swap(a, e);
    t0 = std::max(t0, a);
    t1 = std::min(t1, e);
    if (t0 > t1) return std::numeric_limits<double>::infinity();
  }
  return t0 > 0.0 ? t0 : std::numeric_limits<double>::infinity();
}

struct SceneSpec {
  std::vector<BoundingBox3D> boxes;
  double ground_z = -1.73;
  double max_range = 40.0;
  /// Only beams within this azimuth window (radians, centred on 0) are cast.
  double azimuth_window = 2.0 * std::numbers::pi;
};

/// Ray-cast every beam of `m` against the boxes and a ground plane.
inline PointCloud raycast_scene(const LaserModel& m, const SceneSpec& spec) {
  PointCloud c;
  for (int row = 0; row < m.ring_count(); ++row) {
    const auto& r = m.rings[row];
    const Eigen::Vector3d origin(0.0, 0.0, r.height);
    for (int col = 0; col < m.azimuth_bins; ++col) {
      const double phi = m.column_center(col);
      if (std::abs(wrap_angle(phi)) > 0.5 * spec.azimuth_window) continue;
      const Eigen::Vector3d dir(std::cos(r.inclination) * std::cos(phi), std::cos(r.inclination) * std::sin(phi),
                                std::sin(r.inclination));
      double t = std::numeric_limits<double>::infinity();
      double refl = 0.3;
      for (const auto& b : spec.boxes) {
        const double tb = ray_box(origin, dir, b);
        if (tb < t) {
          t = tb;
          refl = 0.6;
        }
      }
      if (dir.z() < 0.0) {
        const double tg = (spec.ground_z - origin.z()) / dir.z();
        if (tg < t) {
          t = tg;
          refl = 0.2;
        }
      }
      if (t <= spec.max_range) c.points.emplace_back(origin + t * dir, refl);
    }
  }
  return c;
}

/// Car-sized box standing on the ground at horizontal distance `dist` along
/// azimuth `bearing`, with heading `yaw`.
inline BoundingBox3D car(double dist, double bearing, double yaw, double ground_z = -1.73) {
  const Eigen::Vector3d dims(4.0, 1.8, 1.5);
  return BoundingBox3D({dist * std::cos(bearing), dist * std::sin(bearing), ground_z + 0.75}, dims, yaw, "Car");
}

/// Capture-ordered rings: each ring sweeps azimuth from -pi to pi once with
/// `per_ring` points at random d_xy in [lo, hi]; optional Gaussian z noise.
inline PointCloud capture_rings(const std::vector<LaserRing>& rings, std::size_t per_ring, double lo, double hi,
                                double z_noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  std::normal_distribution<double> noise(0.0, z_noise > 0.0 ? z_noise : 1.0);
  PointCloud c;
  for (const auto& r : rings) {
    for (std::size_t k = 0; k < per_ring; ++k) {
      const double phi = -std::numbers::pi + (k + 0.5) * 2.0 * std::numbers::pi / per_ring;
      const double dxy = dist(rng);
      double z = std::tan(r.inclination) * dxy + r.height;
      if (z_noise > 0.0) z += noise(rng);
      c.points.emplace_back(dxy * std::cos(phi), dxy * std::sin(phi), z, 0.5);
    }
  }
  return c;
}

/// Attack fixture: a small sensor, one target car per frame seen from a
/// varying bearing, and a dense plume sequence.
struct AttackFixture {
  LaserModel model;
  std::vector<SweepFrame> frames;
  SequenceSample plume;
};

inline LaserModel attack_model() { return LaserModel::uniform(32, 0.05, -0.35, 1024); }

/// `n` frames; car yaw chosen so that the requested faces are visible.
/// yaw_offset 0 = head-on (rear face toward the sensor), pi/2 = side-on,
/// pi/4 = two faces.
inline AttackFixture attack_fixture(std::size_t n, double yaw_offset, std::uint64_t seed, int plume_points = 30000) {
  AttackFixture fx;
  fx.model = attack_model();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(7.0, 10.0), bearing(-0.5, 0.5), jitter(-0.05, 0.05);
  for (std::size_t i = 0; i < n; ++i) {
    const double b = bearing(rng);
    const BoundingBox3D target = car(dist(rng), b, wrap_angle(b + yaw_offset + jitter(rng)));
    SceneSpec spec;
    spec.boxes = {target};
    spec.azimuth_window = 2.4;
    SweepFrame f;
    f.frame_id = "f" + std::to_string(i);
    f.scene = raycast_scene(fx.model, spec);
    f.scene.frame_id = f.frame_id;
    f.target = target;
    f.gt = {target};
    fx.frames.push_back(std::move(f));
  }
  PlumeParams p = PlumeParams::water_mist();
  p.point_count = plume_points;
  p.base_extent = {1.0, 0.35, 0.45};
  fx.plume = sample_sequence({seed, seed ^ 0xA5A5A5A5ULL, 1, 16}, p);
  return fx;
}

}  // namespace fixture

#endif  // MISTFUSE_TESTS_FIXTURES_HPP
