// mistfuse - header-only toolkit for random-object LiDAR perturbation
// SPDX-License-Identifier: MIT
//
// K-frame random-object sequences (water mist, smoke): a procedural plume
// generator with a content/motion seed split, ROLiD-layout ingestion, and
// realism metrics against a reference sequence.

#ifndef MISTFUSE_OBJECTGEN_SEQUENCE_HPP
#define MISTFUSE_OBJECTGEN_SEQUENCE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mistfuse/cloudcore/distance.hpp"
#include "mistfuse/cloudcore/io.hpp"
#include "mistfuse/cloudcore/point_cloud.hpp"

namespace mistfuse {

enum class ObjectKind { water_mist, smoke };

inline std::string to_string(ObjectKind k) { return k == ObjectKind::smoke ? "smoke" : "water_mist"; }

inline ObjectKind parse_object_kind(const std::string& s) {
  if (s == "water_mist" || s == "mist") return ObjectKind::water_mist;
  if (s == "smoke") return ObjectKind::smoke;
  throw std::invalid_argument("unknown object kind '" + s + "'");
}

/// Seeds standing in for the content latent (fixed per sequence) and the
/// motion latent (per-frame evolution). N is the pre-reduction length and
/// is carried as metadata only.
struct GeneratorLatents {
  std::uint64_t content_seed = 0;
  std::uint64_t motion_seed = 0;
  int frames = 3;             // K
  int sample_length = 16;     // N

  void validate() const {
    if (frames < 1) throw std::invalid_argument("GeneratorLatents: K must be >= 1");
    if (sample_length < frames) throw std::invalid_argument("GeneratorLatents: N must be >= K");
  }
};

struct PlumeParams {
  Eigen::Vector3d base_extent{0.9, 0.45, 0.5};  // per-axis sigma, meters
  int point_count = 1024;
  double drift_velocity = 0.15;   // m/frame
  double dispersion_rate = 0.05;  // m/frame added to every sigma
  double density_falloff = 1.0;   // radial exponent, 1 = Gaussian

  static PlumeParams water_mist() { return {}; }

  static PlumeParams smoke() {
    PlumeParams p;
    p.base_extent = {1.3, 0.8, 0.8};
    p.point_count = 768;
    p.drift_velocity = 0.06;
    p.dispersion_rate = 0.08;
    p.density_falloff = 1.2;
    return p;
  }

  static PlumeParams defaults_for(ObjectKind k) { return k == ObjectKind::smoke ? smoke() : water_mist(); }

  void validate() const {
    if (!(base_extent.array() > 0.0).all()) throw std::invalid_argument("PlumeParams: extents must be > 0");
    if (point_count < 64) throw std::invalid_argument("PlumeParams: point_count must be >= 64");
    if (!(drift_velocity >= 0.0) || !(dispersion_rate >= 0.0) || !(density_falloff > 0.0)) {
      throw std::invalid_argument("PlumeParams: negative rate or non-positive falloff");
    }
  }
};

struct SequenceSample {
  std::vector<PointCloud> frames;
  ObjectKind kind = ObjectKind::water_mist;
  double pressure_mpa = 0.0;
  double distance_m = 0.0;

  int size() const { return static_cast<int>(frames.size()); }
};

/**
 * @brief Draw a K-frame plume sequence.
 *
 * The content seed fixes per-axis shape factors, the plume's horizontal
 * orientation, its drift heading and its mean reflectance. The motion seed
 * drives the per-frame draws. Frame k (0-based) is an anisotropic Gaussian
 * with sigma = base_extent * shape + k * dispersion_rate, centred at
 * k * drift_velocity along the drift heading; coordinates are relative to
 * the first frame's distribution mean. Identical inputs give identical
 * output.
 */
inline SequenceSample sample_sequence(const GeneratorLatents& latents, const PlumeParams& params,
                                      ObjectKind kind = ObjectKind::water_mist) {
  latents.validate();
  params.validate();

  std::mt19937_64 content(latents.content_seed);
  std::uniform_real_distribution<double> shape_factor(0.85, 1.15);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> reflectance(0.05, 0.2);
  const Eigen::Vector3d shape(shape_factor(content), shape_factor(content), shape_factor(content));
  const double heading = angle(content);
  const double orientation = 0.25 * angle(content);
  const double mean_intensity = reflectance(content);
  const Eigen::Vector3d drift_dir(std::cos(heading), std::sin(heading), 0.0);
  const Eigen::Matrix3d orient = Eigen::AngleAxisd(orientation, Eigen::Vector3d::UnitZ()).toRotationMatrix();

  std::mt19937_64 motion(latents.motion_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  SequenceSample seq;
  seq.kind = kind;
  for (int k = 0; k < latents.frames; ++k) {
    const Eigen::Vector3d sigma =
        params.base_extent.cwiseProduct(shape) + Eigen::Vector3d::Constant(k * params.dispersion_rate);
    const Eigen::Vector3d center = k * params.drift_velocity * drift_dir;
    PointCloud frame;
    frame.frame_id = "frame_" + std::to_string(k);
    frame.points.reserve(static_cast<std::size_t>(params.point_count));
    for (int i = 0; i < params.point_count; ++i) {
      Eigen::Vector3d g(gauss(motion), gauss(motion), gauss(motion));
      if (params.density_falloff != 1.0) {
        const double r = g.norm();
        if (r > 0.0) g *= std::pow(r, params.density_falloff - 1.0);
      }
      const double intensity = std::clamp(mean_intensity + 0.05 * gauss(motion), 0.0, 1.0);
      frame.points.emplace_back(center + orient * sigma.cwiseProduct(g), intensity);
    }
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

// ---------------------------------------------------------------------------
// ROLiD layout: <dir>/frame_%06d.bin + meta.txt (kind=, pressure_mpa=, distance_m=)
// ---------------------------------------------------------------------------

inline std::string rolid_frame_name(int k) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%06d.bin", k);
  return buf;
}

/// Frames in filename order, each re-centred on its own centroid.
inline SequenceSample load_rolid(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw PathError("not a directory: " + dir.string());
  const fs::path meta_path = dir / "meta.txt";
  std::ifstream meta(meta_path);
  if (!meta) throw FormatError(meta_path.string() + ": unreadable metadata");

  SequenceSample seq;
  bool have_kind = false;
  std::string line;
  while (std::getline(meta, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError(meta_path.string() + ": expected key=value, got '" + line + "'");
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    try {
      if (key == "kind") {
        seq.kind = parse_object_kind(value);
        have_kind = true;
      } else if (key == "pressure_mpa") {
        seq.pressure_mpa = std::stod(value);
      } else if (key == "distance_m") {
        seq.distance_m = std::stod(value);
      }
    } catch (const std::exception&) {
      throw FormatError(meta_path.string() + ": bad value for '" + key + "'");
    }
  }
  if (!have_kind) throw FormatError(meta_path.string() + ": missing kind=");

  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && name.rfind("frame_", 0) == 0 && e.path().extension() == ".bin") {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw FormatError(dir.string() + ": no frame_*.bin files");

  for (const auto& f : files) {
    PointCloud frame = read_kitti_bin(f);
    if (frame.empty()) throw FormatError(f.string() + ": empty frame");
    const Eigen::Vector3d c = centroid(frame);
    for (auto& p : frame.points) p.xyz -= c;
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

inline void write_rolid(const std::filesystem::path& dir, const SequenceSample& seq) {
  std::filesystem::create_directories(dir);
  for (int k = 0; k < seq.size(); ++k) write_kitti_bin(dir / rolid_frame_name(k), seq.frames[k]);
  std::ofstream meta(dir / "meta.txt", std::ios::trunc);
  if (!meta) throw PathError("cannot write " + (dir / "meta.txt").string());
  meta << "kind=" << to_string(seq.kind) << "\npressure_mpa=" << seq.pressure_mpa
       << "\ndistance_m=" << seq.distance_m << '\n';
}

// ---------------------------------------------------------------------------
// Realism metrics
// ---------------------------------------------------------------------------

struct RealismRow {
  int frame = 0;
  double hausdorff = 0.0;
  double chamfer = 0.0;
};

struct RealismReport {
  std::vector<RealismRow> rows;
  double mean_hausdorff = 0.0;
  double mean_chamfer = 0.0;

  /// CSV: frame,hausdorff,chamfer then a `mean` row.
  std::string table() const {
    std::ostringstream out;
    out.precision(6);
    out << std::fixed << "frame,hausdorff,chamfer\n";
    for (const auto& r : rows) out << r.frame << ',' << r.hausdorff << ',' << r.chamfer << '\n';
    out << "mean," << mean_hausdorff << ',' << mean_chamfer << '\n';
    return out.str();
  }
};

/// Per-frame-pair Hausdorff and Chamfer distances, then their means.
inline RealismReport realism_report(const SequenceSample& generated, const SequenceSample& reference) {
  if (generated.size() != reference.size()) {
    throw std::invalid_argument("realism_report: K mismatch (" + std::to_string(generated.size()) + " vs " +
                                std::to_string(reference.size()) + ")");
  }
  if (generated.size() == 0) throw std::invalid_argument("realism_report: empty sequences");
  RealismReport rep;
  for (int k = 0; k < generated.size(); ++k) {
    RealismRow row{k, hausdorff(generated.frames[k], reference.frames[k]),
                   chamfer(generated.frames[k], reference.frames[k])};
    rep.mean_hausdorff += row.hausdorff;
    rep.mean_chamfer += row.chamfer;
    rep.rows.push_back(row);
  }
  rep.mean_hausdorff /= generated.size();
  rep.mean_chamfer /= generated.size();
  return rep;
}

}  // namespace mistfuse

#endif  // MISTFUSE_OBJECTGEN_SEQUENCE_HPP
