// mistfuse - header-only toolkit for random-object LiDAR perturbation
// SPDX-License-Identifier: MIT
//
// Range-image rendering: spherical projection with a keep-nearest z-buffer,
// back-projection through the per-ring sensor model, and round-trip audit.

#ifndef MISTFUSE_RANGESIM_RANGE_IMAGE_HPP
#define MISTFUSE_RANGESIM_RANGE_IMAGE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "mistfuse/cloudcore/point_cloud.hpp"
#include "mistfuse/rangesim/laser_model.hpp"

namespace mistfuse {

/// H x W grid of ranges (meters from the sensor origin), row-major.
struct RangeImage {
  static constexpr double kEmpty = 0.0;
  static constexpr std::int64_t kNoSource = -1;

  LaserModel model;
  std::vector<double> depth;
  std::vector<std::int64_t> source_index;
  std::vector<double> intensity;  // carried from the winning point
  std::size_t input_points = 0;
  std::size_t dropped = 0;  // points too far from every ring

  int rows() const { return model.ring_count(); }
  int cols() const { return model.azimuth_bins; }
  double azimuth_origin() const { return model.azimuth_origin; }
  std::size_t cell(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(cols()) + static_cast<std::size_t>(col);
  }
  bool occupied(std::size_t c) const { return source_index[c] != kNoSource; }

  std::size_t occupied_count() const {
    return static_cast<std::size_t>(
        std::count_if(source_index.begin(), source_index.end(), [](auto s) { return s != kNoSource; }));
  }
};

inline constexpr double kMinProjectableRange = 0.1;

/**
 * @brief Render a cloud into a range image under `model`.
 *
 * Each point lands in (assigned ring, azimuth column). When several points
 * share a cell only the nearest survives; equal ranges keep the lowest input
 * index. Points beyond one ring pitch of every beam are dropped and counted.
 * Throws std::invalid_argument for an empty cloud or a point within
 * kMinProjectableRange of the origin.
 */
inline RangeImage project(const PointCloud& cloud, const LaserModel& model) {
  model.validate();
  if (cloud.empty()) throw std::invalid_argument("project: empty cloud");
  RangeImage img;
  img.model = model;
  const std::size_t n_cells = static_cast<std::size_t>(model.ring_count()) * model.azimuth_bins;
  img.depth.assign(n_cells, RangeImage::kEmpty);
  img.source_index.assign(n_cells, RangeImage::kNoSource);
  img.intensity.assign(n_cells, 0.0);
  img.input_points = cloud.size();

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Eigen::Vector3d& p = cloud[i].xyz;
    const double range = p.norm();
    if (!(range > kMinProjectableRange)) {
      throw std::invalid_argument("project: point " + std::to_string(i) + " is at the sensor origin");
    }
    const BeamAssignment a = assign_beam(model, p);
    if (!a.assignable) {
      ++img.dropped;
      continue;
    }
    const std::size_t c = img.cell(a.row, a.col);
    if (!img.occupied(c) || range < img.depth[c]) {
      img.depth[c] = range;
      img.source_index[c] = static_cast<std::int64_t>(i);
      img.intensity[c] = cloud[i].intensity;
    }
  }
  return img;
}

/// Range along ring `r`'s own beam for a cell storing sensor-origin range d.
inline double beam_range(const LaserModel& model, const LaserRing& r, double d) {
  const double c = std::cos(r.inclination);
  const double radicand = d * d - r.height * r.height * (model.corrected_radicand ? c * c : c);
  if (radicand < 0.0) throw std::invalid_argument("backproject: range shorter than ring origin offset");
  return std::sqrt(radicand) - r.height * std::sin(r.inclination);
}

/**
 * @brief One point per occupied cell, row-major, ring channel = row.
 *
 * Shared-origin form: x = d cos(theta) cos(phi), y = d cos(theta) sin(phi),
 * z = d sin(theta). Corrected form replaces d by the along-beam range d'
 * from beam_range() and adds h_i to z. phi is the column center.
 */
inline PointCloud backproject(const RangeImage& image) {
  const LaserModel& m = image.model;
  PointCloud out;
  out.ring.emplace();
  for (int row = 0; row < image.rows(); ++row) {
    const LaserRing& r = m.rings[row];
    const double ct = std::cos(r.inclination), st = std::sin(r.inclination);
    for (int col = 0; col < image.cols(); ++col) {
      const std::size_t c = image.cell(row, col);
      if (!image.occupied(c)) continue;
      const double d = image.depth[c];
      if (!(d > 0.0)) throw std::invalid_argument("backproject: non-positive depth in occupied cell");
      const double phi = m.column_center(col);
      Eigen::Vector3d p;
      if (m.use_corrected_backprojection) {
        const double dp = beam_range(m, r, d);
        p = {dp * ct * std::cos(phi), dp * ct * std::sin(phi), dp * st + r.height};
      } else {
        p = {d * ct * std::cos(phi), d * ct * std::sin(phi), d * st};
      }
      out.points.emplace_back(p, image.intensity[c]);
      out.ring->push_back(row);
    }
  }
  return out;
}

/// Input indices of the points backproject() emits, in the same order.
inline std::vector<std::int64_t> backprojected_sources(const RangeImage& image) {
  std::vector<std::int64_t> src;
  for (auto s : image.source_index) {
    if (s != RangeImage::kNoSource) src.push_back(s);
  }
  return src;
}

struct RoundtripLoss {
  std::size_t lost_count = 0;
  double lost_fraction = 0.0;
};

/// Points that do not come back from project -> backproject.
inline RoundtripLoss roundtrip_loss(const PointCloud& cloud, const LaserModel& model) {
  if (cloud.empty()) return {};
  const RangeImage img = project(cloud, model);
  RoundtripLoss loss;
  loss.lost_count = cloud.size() - img.occupied_count();
  loss.lost_fraction = static_cast<double>(loss.lost_count) / static_cast<double>(cloud.size());
  return loss;
}

/// 16-bit binary PGM (depth in centimeters, 0 = empty) plus a sidecar
/// model file at `<path>.model.txt`.
inline void export_range_image(const std::filesystem::path& path, const RangeImage& image) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw PathError("cannot write " + path.string());
  out << "P5\n" << image.cols() << ' ' << image.rows() << "\n65535\n";
  for (std::size_t c = 0; c < image.depth.size(); ++c) {
    std::uint16_t v = 0;
    if (image.occupied(c)) {
      v = static_cast<std::uint16_t>(std::clamp(std::lround(image.depth[c] * 100.0), 1L, 65535L));
    }
    const char be[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xFF)};
    out.write(be, 2);
  }
  write_laser_model(std::filesystem::path(path.string() + ".model.txt"), image.model);
}

}  // namespace mistfuse

#endif  // MISTFUSE_RANGESIM_RANGE_IMAGE_HPP
