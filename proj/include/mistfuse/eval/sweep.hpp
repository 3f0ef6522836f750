// mistfuse - header-only toolkit for random-object LiDAR perturbation
// SPDX-License-Identifier: MIT
//
// Grid search over fusion configurations: fuse every frame per cell, collect
// detections, score the attack, report the best cell.

#ifndef MISTFUSE_EVAL_SWEEP_HPP
#define MISTFUSE_EVAL_SWEEP_HPP

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mistfuse/eval/attack.hpp"
#include "mistfuse/eval/detection.hpp"
#include "mistfuse/fusion/fuse.hpp"

namespace mistfuse {

/// One scene frame under attack. `gt` holds every labelled box; `target`
/// is the vehicle the object is attached to.
struct SweepFrame {
  std::string frame_id;
  PointCloud scene;
  BoundingBox3D target;
  std::vector<BoundingBox3D> gt;
};

/// Source of detections for original and fused frames.
class DetectionProvider {
 public:
  virtual ~DetectionProvider() = default;
  virtual DetectionSet baseline(const SweepFrame& frame, const LaserModel& model) const = 0;
  virtual DetectionSet adversarial(const SweepFrame& frame, const FusionConfig& cfg, int k,
                                   const FusedFrame& fused) const = 0;
};

/**
 * @brief Point-count stand-in for a real detector.
 *
 * A vehicle box is reported (with its own ground-truth geometry) iff at
 * least `threshold` scene-derived points lie inside it; confidence is
 * min(1, n / (2 * threshold)). Object points are never counted, so the
 * detector sees only how much of the vehicle survives occlusion. The
 * baseline runs on the re-rendered scene, so rendering loss alone never
 * registers as an attack.
 */
class MockDetector final : public DetectionProvider {
 public:
  explicit MockDetector(std::size_t threshold = 50) : threshold_(threshold) {
    if (threshold == 0) throw std::invalid_argument("MockDetector: threshold must be > 0");
  }

  std::size_t threshold() const { return threshold_; }

  DetectionSet detect(const std::string& frame_id, const PointCloud& cloud, const std::vector<bool>* counted,
                      const std::vector<BoundingBox3D>& gt) const {
    DetectionSet out{frame_id, "mock", {}};
    for (const auto& box : gt) {
      if (!is_vehicle_label(box.label)) continue;
      std::size_t n = 0;
      for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (counted && !(*counted)[i]) continue;
        n += box.contains(cloud[i].xyz) ? 1 : 0;
      }
      if (n >= threshold_) {
        const double conf = std::min(1.0, static_cast<double>(n) / (2.0 * static_cast<double>(threshold_)));
        out.detections.push_back({box, conf});
      }
    }
    return out;
  }

  DetectionSet baseline(const SweepFrame& frame, const LaserModel& model) const override {
    return detect(frame.frame_id, render(frame.scene, model), nullptr, frame.gt);
  }

  DetectionSet adversarial(const SweepFrame& frame, const FusionConfig&, int, const FusedFrame& fused) const override {
    std::vector<bool> scene_mask(fused.origin.size());
    for (std::size_t i = 0; i < fused.origin.size(); ++i) scene_mask[i] = fused.origin[i].source == PointSource::scene;
    return detect(frame.frame_id, fused.cloud, &scene_mask, frame.gt);
  }

 private:
  std::size_t threshold_;
};

/// Shortest round-trip decimal for a double.
inline std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

/// Directory-safe key for one grid cell, e.g. `body_side_dh0.5_dv0.004_a-10`.
inline std::string cell_key(const FusionConfig& c) {
  return to_string(c.mode) + "_dh" + format_number(c.d_h) + "_dv" + format_number(c.d_v) + "_a" +
         format_number(c.spray_angle_deg);
}

inline std::string fused_frame_name(const std::string& frame_id, int k) {
  return frame_id + "_" + std::to_string(k);
}

class MissingDetectionError : public std::runtime_error {
 public:
  MissingDetectionError(const std::string& frame, const std::string& path)
      : std::runtime_error("missing detections for frame " + frame + " (" + path + ")"), frame_id(frame) {}
  std::string frame_id;
};

/**
 * @brief Detections read from interchange files.
 *
 * Layout under `root`: `baseline/<frame>.json` for original frames and
 * `<cell_key>/<frame>_<k>.json` for fused frames.
 */
class FileDetections final : public DetectionProvider {
 public:
  explicit FileDetections(std::filesystem::path root) : root_(std::move(root)) {}

  DetectionSet baseline(const SweepFrame& frame, const LaserModel&) const override {
    return load(frame.frame_id, root_ / "baseline" / (frame.frame_id + ".json"));
  }

  DetectionSet adversarial(const SweepFrame& frame, const FusionConfig& cfg, int k, const FusedFrame&) const override {
    DetectionSet set = load(frame.frame_id, root_ / cell_key(cfg) / (fused_frame_name(frame.frame_id, k) + ".json"));
    set.frame_id = frame.frame_id;
    return set;
  }

 private:
  static DetectionSet load(const std::string& frame_id, const std::filesystem::path& p) {
    if (!std::filesystem::exists(p)) throw MissingDetectionError(frame_id, p.string());
    DetectionSet set = read_detections(p);
    set.frame_id = frame_id;
    return set;
  }

  std::filesystem::path root_;
};

struct SweepGrid {
  std::vector<FusionMode> modes{FusionMode::body_side};
  std::vector<double> d_h{0.5};
  std::vector<double> d_v{0.5};
  std::vector<double> angles_deg{0.0};
  DatasetProfile dataset = DatasetProfile::generic;

  std::size_t size() const { return modes.size() * d_h.size() * d_v.size() * angles_deg.size(); }

  /// Cells in mode-major, then d_h, d_v, angle order.
  std::vector<FusionConfig> cells() const {
    std::vector<FusionConfig> out;
    for (auto m : modes)
      for (double h : d_h)
        for (double v : d_v)
          for (double a : angles_deg) out.push_back({m, h, v, a, dataset});
    return out;
  }
};

struct SweepCell {
  FusionConfig config;
  std::size_t frames = 0;   // fused frames scored
  std::size_t skipped = 0;  // scene frames where the mode was infeasible
  std::size_t detected = 0;
  std::size_t successes = 0;
  std::optional<double> asr;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  std::optional<std::size_t> argmax;  // first cell attaining the maximum ASR

  std::string csv() const {
    std::ostringstream out;
    out << "mode,d_h,d_v,angle_deg,frames,detected,successes,asr\n";
    for (const auto& c : cells) {
      out << to_string(c.config.mode) << ',' << format_number(c.config.d_h) << ',' << format_number(c.config.d_v)
          << ',' << format_number(c.config.spray_angle_deg) << ',' << c.frames << ',' << c.detected << ','
          << c.successes << ',';
      if (c.asr) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6f", *c.asr);
        out << buf;
      } else {
        out << "undefined";
      }
      out << '\n';
    }
    return out.str();
  }
};

struct SweepOptions {
  MatchThresholds thresholds{};
  unsigned jobs = 1;
  Eigen::Vector3d sensor_origin = Eigen::Vector3d::Zero();
};

/// Score one configuration over all frames with precomputed baselines.
inline SweepCell evaluate_cell(const std::vector<SweepFrame>& frames, const std::vector<DetectionSet>& baselines,
                               const SequenceSample& seq, const FusionConfig& cfg, const LaserModel& model,
                               const DetectionProvider& detector, const SweepOptions& opt = {}) {
  SweepCell cell;
  cell.config = cfg;
  std::vector<AttackFrame> scored;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    FusionResult fused;
    try {
      fused = fuse(frames[f].scene, seq, frames[f].target, cfg, model, opt.sensor_origin);
    } catch (const InfeasibleModeError&) {
      ++cell.skipped;
      continue;
    }
    for (std::size_t k = 0; k < fused.frames.size(); ++k) {
      DetectionSet adv = detector.adversarial(frames[f], cfg, static_cast<int>(k), fused.frames[k]);
      adv.frame_id = frames[f].frame_id;
      scored.push_back({frames[f].frame_id, frames[f].gt, baselines[f], std::move(adv)});
    }
  }
  const AttackSummary s = attack_success(scored, opt.thresholds);
  cell.frames = scored.size();
  cell.detected = s.detected;
  cell.successes = s.successes;
  cell.asr = s.asr;
  return cell;
}

/**
 * @brief Evaluate every grid cell and locate the most effective one.
 *
 * Cells run on up to `opt.jobs` threads; results are stored by cell index,
 * so the report does not depend on scheduling. A missing detection file
 * aborts the sweep with MissingDetectionError.
 */
inline SweepResult sweep(const std::vector<SweepFrame>& frames, const SequenceSample& seq, const SweepGrid& grid,
                         const LaserModel& model, const DetectionProvider& detector, const SweepOptions& opt = {}) {
  if (grid.size() == 0) throw std::invalid_argument("sweep: empty grid");
  std::vector<DetectionSet> baselines;
  for (const auto& f : frames) {
    DetectionSet b = detector.baseline(f, model);
    b.frame_id = f.frame_id;
    baselines.push_back(std::move(b));
  }

  const auto configs = grid.cells();
  SweepResult result;
  result.cells.resize(configs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      try {
        result.cells[i] = evaluate_cell(frames, baselines, seq, configs[i], model, detector, opt);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = configs.size();
      }
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(opt.jobs, static_cast<unsigned>(configs.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  for (std::size_t i = 0; i < result.cells.size(); ++i) {
    const auto& a = result.cells[i].asr;
    if (a && (!result.argmax || *a > *result.cells[*result.argmax].asr)) result.argmax = i;
  }
  return result;
}

}  // namespace mistfuse

#endif  // MISTFUSE_EVAL_SWEEP_HPP
