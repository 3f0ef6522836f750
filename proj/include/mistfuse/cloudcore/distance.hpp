// mistfuse - header-only toolkit for random-object LiDAR perturbation
// SPDX-License-Identifier: MIT
//
// Point-set distances (Chamfer, Hausdorff) backed by a uniform-grid
// nearest-neighbour index.

#ifndef MISTFUSE_CLOUDCORE_DISTANCE_HPP
#define MISTFUSE_CLOUDCORE_DISTANCE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mistfuse/cloudcore/point_cloud.hpp"

namespace mistfuse {

/**
 * @brief Exact nearest-neighbour index over a fixed point set.
 *
 * Sets smaller than kBruteForceBelow are scanned linearly. Larger sets are
 * bucketed into a uniform grid and searched in Chebyshev shells around the
 * query cell; a shell search stops once no unvisited cell can beat the best
 * squared distance found. Both paths evaluate the same squared-distance
 * expression, so their results agree bit-for-bit.
 */
class NearestNeighborIndex {
 public:
  static constexpr std::size_t kBruteForceBelow = 256;

  explicit NearestNeighborIndex(const PointCloud& cloud, bool force_brute_force = false) {
    pts_.reserve(cloud.size());
    for (const auto& p : cloud) pts_.push_back(p.xyz);
    if (pts_.empty()) throw std::invalid_argument("NearestNeighborIndex: empty cloud");
    use_grid_ = !force_brute_force && pts_.size() >= kBruteForceBelow;
    if (use_grid_) build_grid();
  }

  bool uses_grid() const { return use_grid_; }

  /// Squared distance from q to its nearest indexed point.
  double nearest_sq(const Eigen::Vector3d& q) const {
    return use_grid_ ? grid_nearest_sq(q) : brute_nearest_sq(q);
  }

  double nearest(const Eigen::Vector3d& q) const { return std::sqrt(nearest_sq(q)); }

 private:
  static double dist_sq(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
    const double dx = a.x() - b.x(), dy = a.y() - b.y(), dz = a.z() - b.z();
    return dx * dx + dy * dy + dz * dz;
  }

  double brute_nearest_sq(const Eigen::Vector3d& q) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : pts_) best = std::min(best, dist_sq(q, p));
    return best;
  }

  void build_grid() {
    lo_ = pts_.front();
    Eigen::Vector3d hi = pts_.front();
    for (const auto& p : pts_) {
      lo_ = lo_.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    const Eigen::Vector3d extent = (hi - lo_).cwiseMax(1e-9);
    // ~2 points per cell on average for a volumetric spread.
    const double target_cells = static_cast<double>(pts_.size()) / 2.0;
    cell_ = std::cbrt(extent.prod() / target_cells);
    // Flat or linear sets: fall back to the largest extent.
    if (!(cell_ > 0.0) || !std::isfinite(cell_)) cell_ = extent.maxCoeff() / std::cbrt(target_cells);
    const double cell_budget = 8.0 * static_cast<double>(pts_.size()) + 64.0;
    auto cells_for = [&](double c) {
      double n = 1.0;
      for (int a = 0; a < 3; ++a) n *= std::floor(extent[a] / c) + 1.0;
      return n;
    };
    while (cells_for(cell_) > cell_budget) cell_ *= 1.5;
    for (int a = 0; a < 3; ++a) {
      dims_[a] = static_cast<std::int64_t>(std::floor(extent[a] / cell_)) + 1;
    }
    const auto total = static_cast<std::size_t>(dims_[0] * dims_[1] * dims_[2]);
    std::vector<std::uint32_t> counts(total + 1, 0);
    std::vector<std::size_t> cell_of(pts_.size());
    for (std::size_t i = 0; i < pts_.size(); ++i) {
      cell_of[i] = flat(cell_coord(pts_[i]));
      ++counts[cell_of[i] + 1];
    }
    for (std::size_t c = 0; c < total; ++c) counts[c + 1] += counts[c];
    starts_ = counts;
    order_.resize(pts_.size());
    for (std::size_t i = 0; i < pts_.size(); ++i) order_[counts[cell_of[i]]++] = static_cast<std::uint32_t>(i);
  }

  std::array<std::int64_t, 3> cell_coord(const Eigen::Vector3d& p) const {
    std::array<std::int64_t, 3> c{};
    for (int a = 0; a < 3; ++a) c[a] = static_cast<std::int64_t>(std::floor((p[a] - lo_[a]) / cell_));
    return c;
  }

  std::size_t flat(const std::array<std::int64_t, 3>& c) const {
    std::array<std::int64_t, 3> k{};
    for (int a = 0; a < 3; ++a) k[a] = std::clamp<std::int64_t>(c[a], 0, dims_[a] - 1);
    return static_cast<std::size_t>((k[2] * dims_[1] + k[1]) * dims_[0] + k[0]);
  }

  void scan_cell(std::int64_t x, std::int64_t y, std::int64_t z, const Eigen::Vector3d& q,
                 double& best) const {
    const auto c = static_cast<std::size_t>((z * dims_[1] + y) * dims_[0] + x);
    for (auto k = starts_[c]; k < starts_[c + 1]; ++k) best = std::min(best, dist_sq(q, pts_[order_[k]]));
  }

  double grid_nearest_sq(const Eigen::Vector3d& q) const {
    const auto qc = cell_coord(q);
    // Rings beyond this radius contain no cells at all.
    std::int64_t max_ring = 0;
    for (int a = 0; a < 3; ++a) {
      max_ring = std::max({max_ring, std::abs(qc[a]), std::abs(qc[a] - (dims_[a] - 1))});
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::int64_t r = 0; r <= max_ring; ++r) {
      const std::int64_t x0 = qc[0] - r, x1 = qc[0] + r;
      const std::int64_t y0 = qc[1] - r, y1 = qc[1] + r;
      const std::int64_t z0 = qc[2] - r, z1 = qc[2] + r;
      for (std::int64_t z = std::max<std::int64_t>(z0, 0); z <= std::min(z1, dims_[2] - 1); ++z) {
        for (std::int64_t y = std::max<std::int64_t>(y0, 0); y <= std::min(y1, dims_[1] - 1); ++y) {
          const bool shell_face = (z == z0 || z == z1 || y == y0 || y == y1);
          if (shell_face) {
            for (std::int64_t x = std::max<std::int64_t>(x0, 0); x <= std::min(x1, dims_[0] - 1); ++x) {
              scan_cell(x, y, z, q, best);
            }
          } else {
            if (x0 >= 0 && x0 < dims_[0]) scan_cell(x0, y, z, q, best);
            if (x1 != x0 && x1 >= 0 && x1 < dims_[0]) scan_cell(x1, y, z, q, best);
          }
        }
      }
      // Every unvisited cell is at least r whole cells away from q.
      const double reach = static_cast<double>(r) * cell_ * (1.0 - 1e-9);
      if (best <= reach * reach) break;
    }
    return best;
  }

  std::vector<Eigen::Vector3d> pts_;
  bool use_grid_ = false;
  Eigen::Vector3d lo_ = Eigen::Vector3d::Zero();
  double cell_ = 1.0;
  std::array<std::int64_t, 3> dims_{1, 1, 1};
  std::vector<std::uint32_t> starts_;
  std::vector<std::uint32_t> order_;
};

namespace detail {

inline void require_non_empty(const PointCloud& a, const PointCloud& b, const char* what) {
  if (a.empty() || b.empty()) throw std::invalid_argument(std::string(what) + ": empty cloud");
}

/// Nearest distances from every point of `from` into `to`.
inline std::vector<double> directed_nn(const PointCloud& from, const PointCloud& to) {
  const NearestNeighborIndex index(to);
  std::vector<double> d;
  d.reserve(from.size());
  for (const auto& p : from) d.push_back(index.nearest(p.xyz));
  return d;
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace detail

/// Symmetric mean of nearest-neighbour distances:
/// 0.5 * (mean_a min_b |a-b| + mean_b min_a |a-b|).
inline double chamfer(const PointCloud& a, const PointCloud& b) {
  detail::require_non_empty(a, b, "chamfer");
  return 0.5 * (detail::mean(detail::directed_nn(a, b)) + detail::mean(detail::directed_nn(b, a)));
}

inline double directed_hausdorff(const PointCloud& from, const PointCloud& to) {
  detail::require_non_empty(from, to, "directed_hausdorff");
  const auto d = detail::directed_nn(from, to);
  return *std::max_element(d.begin(), d.end());
}

inline double hausdorff(const PointCloud& a, const PointCloud& b) {
  detail::require_non_empty(a, b, "hausdorff");
  return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

}  // namespace mistfuse

#endif  // MISTFUSE_CLOUDCORE_DISTANCE_HPP
