// mistfuse - header-only toolkit for random-object LiDAR perturbation
// SPDX-License-Identifier: MIT
//
// Batch subcommands behind the `mistfuse` tool. Each returns a process exit
// code: 0 success, 1 evaluation undefined, 2 input error.

#ifndef MISTFUSE_CLI_COMMANDS_HPP
#define MISTFUSE_CLI_COMMANDS_HPP

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mistfuse/mistfuse.hpp"

namespace mistfuse::cli {

enum ExitCode : int { kOk = 0, kUndefined = 1, kInputError = 2 };

namespace fs = std::filesystem;

/// splitmix64 step; derives the motion seed from the run seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Command-line values that take precedence over the manifest.
struct Overrides {
  std::optional<std::string> model;
  std::optional<std::string> mode;
  std::optional<double> d_h;
  std::optional<double> d_v;
  std::optional<double> angle;
  std::optional<std::uint64_t> seed;
  unsigned jobs = 1;
  bool mock_detector = false;
};

/**
 * @brief One experiment: scenes, targets, object source, sensor model, seed.
 *
 * Manifest keys (relative paths resolve against the manifest directory):
 *   dataset_root, frames, output_dir           required
 *   seed, config, model, sequence_dir          optional
 *   object_kind, sequence_frames, point_count  generator settings
 *   target = nearest | <label index>
 *   mock_threshold, detections_dir
 *   grid.modes, grid.d_h, grid.d_v, grid.angles
 */
struct RunManifest {
  fs::path dataset_root;
  std::vector<std::string> frames;
  fs::path output_dir;
  std::uint64_t seed = 0;
  FusionConfig config;
  LaserModel model = LaserModel::kitti_hdl64();
  std::optional<fs::path> sequence_dir;
  ObjectKind object_kind = ObjectKind::water_mist;
  int sequence_frames = 3;
  std::optional<int> point_count;
  std::string target = "nearest";
  std::size_t mock_threshold = 50;
  std::optional<fs::path> detections_dir;
  KeyValues raw;

  static RunManifest load(const fs::path& path, const Overrides& ov = {}) {
    if (!fs::exists(path)) throw PathError("no such manifest: " + path.string());
    RunManifest m;
    m.raw = KeyValues::read(path);
    const fs::path base = path.parent_path();
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
    const KeyValues& kv = m.raw;

    m.dataset_root = resolve(kv.get("dataset_root"));
    m.frames = kv.get_list("frames");
    m.output_dir = resolve(kv.get("output_dir"));
    m.seed = ov.seed ? *ov.seed : kv.get_u64_or("seed", 0);
    if (kv.has("config")) m.config = read_fusion_config(require(resolve(kv.get("config"))));
    m.config = fusion_config_from(kv, m.config);
    if (ov.mode) m.config.mode = parse_fusion_mode(*ov.mode);
    if (ov.d_h) m.config.d_h = *ov.d_h;
    if (ov.d_v) m.config.d_v = *ov.d_v;
    if (ov.angle) m.config.spray_angle_deg = *ov.angle;
    m.config.validate();

    if (ov.model) {
      m.model = read_laser_model(require(fs::path(*ov.model)));
    } else if (kv.has("model")) {
      m.model = read_laser_model(require(resolve(kv.get("model"))));
    }
    if (kv.has("sequence_dir")) m.sequence_dir = require(resolve(kv.get("sequence_dir")));
    if (kv.has("object_kind")) m.object_kind = parse_object_kind(kv.get("object_kind"));
    m.sequence_frames = static_cast<int>(kv.get_double_or("sequence_frames", 3));
    if (kv.has("point_count")) m.point_count = static_cast<int>(kv.get_double("point_count"));
    m.target = kv.get_or("target", "nearest");
    m.mock_threshold = static_cast<std::size_t>(kv.get_double_or("mock_threshold", 50));
    if (kv.has("detections_dir")) m.detections_dir = resolve(kv.get("detections_dir"));

    require(m.dataset_root);
    if (m.frames.empty()) throw FormatError(path.string() + ": empty frame list");
    for (const auto& f : m.frames) {
      require(m.dataset_root / (f + ".bin"));
      require(m.dataset_root / (f + ".txt"));
    }
    return m;
  }

  SequenceSample object_sequence() const {
    if (sequence_dir) return load_rolid(*sequence_dir);
    PlumeParams params = PlumeParams::defaults_for(object_kind);
    if (point_count) params.point_count = *point_count;
    GeneratorLatents latents{seed, mix_seed(seed), sequence_frames, std::max(16, sequence_frames)};
    return sample_sequence(latents, params, object_kind);
  }

  SweepFrame load_frame(const std::string& id) const {
    SweepFrame f;
    f.frame_id = id;
    f.scene = read_kitti_bin(dataset_root / (id + ".bin"));
    f.scene.frame_id = id;
    f.gt = read_labels(dataset_root / (id + ".txt"));
    f.target = pick_target(f.gt, id);
    return f;
  }

  SweepGrid grid() const {
    SweepGrid g;
    g.dataset = config.dataset;
    g.modes = {config.mode};
    g.d_h = {config.d_h};
    g.d_v = {config.d_v};
    g.angles_deg = {config.spray_angle_deg};
    if (raw.has("grid.modes")) {
      g.modes.clear();
      for (const auto& s : raw.get_list("grid.modes")) g.modes.push_back(parse_fusion_mode(s));
    }
    if (raw.has("grid.d_h")) g.d_h = raw.get_double_list("grid.d_h");
    if (raw.has("grid.d_v")) g.d_v = raw.get_double_list("grid.d_v");
    if (raw.has("grid.angles")) g.angles_deg = raw.get_double_list("grid.angles");
    for (const auto& c : g.cells()) c.validate();
    return g;
  }

 private:
  static fs::path require(const fs::path& p) {
    if (!fs::exists(p)) throw PathError("no such file or directory: " + p.string());
    return p;
  }

  BoundingBox3D pick_target(const std::vector<BoundingBox3D>& gt, const std::string& id) const {
    if (target != "nearest") {
      std::size_t idx = 0;
      try {
        idx = std::stoul(target);
      } catch (const std::exception&) {
        throw FormatError("target must be 'nearest' or a label index, got '" + target + "'");
      }
      if (idx >= gt.size()) throw FormatError(id + ": target index " + target + " out of range");
      return gt[idx];
    }
    const BoundingBox3D* best = nullptr;
    for (const auto& b : gt) {
      if (!is_vehicle_label(b.label)) continue;
      if (!best || b.center.head<2>().norm() < best->center.head<2>().norm()) best = &b;
    }
    if (!best) throw FormatError(id + ": no vehicle label to attack");
    return *best;
  }
};

namespace detail {

template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const PathError& e) {
    err << "error: " << e.what() << '\n';
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
  } catch (const UnfittableError& e) {
    err << "error: " << e.what() << '\n';
  } catch (const MissingDetectionError& e) {
    err << "error: " << e.what() << '\n';
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
  }
  return kInputError;
}

/// Run fn(i) for i in [0, n) on up to `jobs` threads.
template <class Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (unsigned j = 0; j < jobs; ++j) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw PathError("cannot write " + path.string());
  out << text;
}

}  // namespace detail

/// Unfold and fit each frame, pool points per ring, write the model file.
inline int cmd_fit(const std::vector<fs::path>& frames, const fs::path& out_path, int azimuth_bins,
                   std::ostream& log, std::ostream& err) {
  return detail::guarded(err, [&] {
    if (frames.empty()) throw std::invalid_argument("fit: no input frames");
    PointCloud pooled;
    pooled.ring.emplace();
    for (const auto& f : frames) {
      const PointCloud unfolded = scan_unfold(read_kitti_bin(f));
      pooled = concat(pooled, unfolded);
      log << f.string() << ": " << unfolded.size() << " points, " << count_rings(unfolded) << " rings\n";
    }
    const LaserModel model = fit_laser_model(pooled, azimuth_bins);
    write_laser_model(out_path, model);
    log << "wrote " << out_path.string() << " (" << model.ring_count() << " rings)\n";
    return int{kOk};
  });
}

/// Generate one object sequence in ROLiD layout.
inline int cmd_gen(ObjectKind kind, std::uint64_t seed, int frames, std::optional<int> point_count,
                   const fs::path& out_dir, std::ostream& log, std::ostream& err) {
  return detail::guarded(err, [&] {
    PlumeParams params = PlumeParams::defaults_for(kind);
    if (point_count) params.point_count = *point_count;
    const GeneratorLatents latents{seed, mix_seed(seed), frames, std::max(16, frames)};
    const SequenceSample seq = sample_sequence(latents, params, kind);
    write_rolid(out_dir, seq);
    log << "wrote " << seq.size() << " " << to_string(kind) << " frames to " << out_dir.string() << '\n';
    return int{kOk};
  });
}

/// Fused frames `<frame>_<k>.bin` plus provenance.log in the output directory.
inline int cmd_fuse(const fs::path& manifest_path, const Overrides& ov, std::ostream& log, std::ostream& err) {
  return detail::guarded(err, [&] {
    const RunManifest m = RunManifest::load(manifest_path, ov);
    fs::create_directories(m.output_dir);
    const SequenceSample seq = m.object_sequence();
    std::vector<std::string> provenance(m.frames.size());

    detail::parallel_for(m.frames.size(), ov.jobs, [&](std::size_t i) {
      const SweepFrame frame = m.load_frame(m.frames[i]);
      std::ostringstream lines;
      try {
        const FusionResult r = fuse(frame.scene, seq, frame.target, m.config, m.model);
        for (std::size_t k = 0; k < r.frames.size(); ++k) {
          const auto& f = r.frames[k];
          write_kitti_bin(m.output_dir / (fused_frame_name(frame.frame_id, static_cast<int>(k)) + ".bin"), f.cloud);
          lines << frame.frame_id << ',' << k << ',' << f.object_points_pre_gate << ',' << f.object_points_post_gate
                << ',' << f.object_points_visible << ',' << (f.object_empty() ? "empty_object" : "ok") << '\n';
        }
      } catch (const InfeasibleModeError& e) {
        lines << frame.frame_id << ",-,0,0,0,infeasible_mode\n";
      }
      provenance[i] = lines.str();
    });

    std::string text = "frame,k,object_pre_gate,object_post_gate,object_visible,status\n";
    for (const auto& p : provenance) text += p;
    detail::write_text(m.output_dir / "provenance.log", text);
    log << text;
    return int{kOk};
  });
}

namespace detail {

inline int run_sweep(const RunManifest& m, const SweepGrid& grid, const Overrides& ov, const fs::path& csv_path,
                     std::ostream& log) {
  fs::create_directories(m.output_dir);
  const SequenceSample seq = m.object_sequence();
  std::vector<SweepFrame> frames;
  for (const auto& id : m.frames) frames.push_back(m.load_frame(id));

  std::unique_ptr<DetectionProvider> detector;
  if (ov.mock_detector) {
    detector = std::make_unique<MockDetector>(m.mock_threshold);
  } else {
    if (!m.detections_dir) throw FormatError("no detections_dir in manifest and --mock-detector not set");
    detector = std::make_unique<FileDetections>(*m.detections_dir);
  }
  SweepOptions opt;
  opt.jobs = ov.jobs;
  const SweepResult result = sweep(frames, seq, grid, m.model, *detector, opt);
  const std::string csv = result.csv();
  write_text(csv_path, csv);
  log << csv;
  if (!result.argmax) {
    log << "attack success rate undefined: no vehicle detected before the attack\n";
    return int{kUndefined};
  }
  log << "best cell: " << cell_key(result.cells[*result.argmax].config) << '\n';
  return int{kOk};
}

}  // namespace detail

/// ASR of the manifest's single configuration, written to eval.csv.
inline int cmd_eval(const fs::path& manifest_path, const Overrides& ov, std::ostream& log, std::ostream& err) {
  return detail::guarded(err, [&] {
    const RunManifest m = RunManifest::load(manifest_path, ov);
    SweepGrid grid;
    grid.modes = {m.config.mode};
    grid.d_h = {m.config.d_h};
    grid.d_v = {m.config.d_v};
    grid.angles_deg = {m.config.spray_angle_deg};
    grid.dataset = m.config.dataset;
    return detail::run_sweep(m, grid, ov, m.output_dir / "eval.csv", log);
  });
}

/// ASR over the manifest's grid axes, written to sweep.csv.
inline int cmd_sweep(const fs::path& manifest_path, const Overrides& ov, std::ostream& log, std::ostream& err) {
  return detail::guarded(err, [&] {
    const RunManifest m = RunManifest::load(manifest_path, ov);
    return detail::run_sweep(m, m.grid(), ov, m.output_dir / "sweep.csv", log);
  });
}

/// Round-trip loss per frame under the model and under its shared-origin variant.
inline int cmd_roundtrip_audit(const std::vector<fs::path>& frames, const std::optional<fs::path>& model_path,
                               const std::optional<fs::path>& export_dir, std::ostream& log, std::ostream& err) {
  return detail::guarded(err, [&] {
    if (frames.empty()) throw std::invalid_argument("roundtrip-audit: no input frames");
    const LaserModel model = model_path ? read_laser_model(*model_path) : LaserModel::kitti_hdl64();
    const LaserModel naive = model.shared_origin();
    log << "frame,points,lost,lost_fraction,lost_shared_origin,lost_fraction_shared_origin\n";
    for (const auto& f : frames) {
      const PointCloud cloud = read_kitti_bin(f);
      const RoundtripLoss a = roundtrip_loss(cloud, model);
      const RoundtripLoss b = roundtrip_loss(cloud, naive);
      log << cloud.frame_id << ',' << cloud.size() << ',' << a.lost_count << ',' << format_number(a.lost_fraction)
          << ',' << b.lost_count << ',' << format_number(b.lost_fraction) << '\n';
      if (export_dir && !cloud.empty()) {
        fs::create_directories(*export_dir);
        export_range_image(*export_dir / (cloud.frame_id + ".pgm"), project(cloud, model));
      }
    }
    return int{kOk};
  });
}

}  // namespace mistfuse::cli

#endif  // MISTFUSE_CLI_COMMANDS_HPP
