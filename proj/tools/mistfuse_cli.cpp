// mistfuse - header-only toolkit for random-object LiDAR perturbation
// SPDX-License-Identifier: MIT
//
// Command-line front end: fit, gen, fuse, eval, sweep, roundtrip-audit.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mistfuse/cli/commands.hpp"

namespace fs = std::filesystem;
using namespace mistfuse;

namespace {

void add_run_flags(CLI::App* cmd, cli::Overrides& ov, std::string& manifest) {
  cmd->add_option("manifest", manifest, "Run manifest (key = value)")->required();
  cmd->add_option("--model", ov.model, "Laser model file (overrides the manifest)");
  cmd->add_option("--mode", ov.mode, "Fusion mode: head_tail_side, body_side, two_sides, corner_point");
  cmd->add_option("--dh", ov.d_h, "Horizontal density limit in [0, 0.5]");
  cmd->add_option("--dv", ov.d_v, "Vertical density limit in [0, 0.5]");
  cmd->add_option("--angle", ov.angle, "Spray angle in degrees, [-40, 40]");
  cmd->add_option("--seed", ov.seed, "64-bit run seed");
  cmd->add_option("--jobs", ov.jobs, "Worker threads")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mistfuse: random-object LiDAR perturbation and attack evaluation"};
  app.require_subcommand(1);

  std::vector<std::string> fit_frames;
  std::string fit_out = "laser_model.txt";
  int fit_bins = LaserModel::kDefaultAzimuthBins;
  auto* fit = app.add_subcommand("fit", "Estimate a per-ring laser model from raw captures");
  fit->add_option("frames", fit_frames, "KITTI-style .bin frames in capture order")->required();
  fit->add_option("-o,--out", fit_out, "Output model file");
  fit->add_option("--bins", fit_bins, "Azimuth columns of the model")->check(CLI::Range(16, 1 << 20));

  std::string gen_kind = "water_mist", gen_out = "sequence";
  std::uint64_t gen_seed = 0;
  int gen_frames = 3;
  std::optional<int> gen_points;
  auto* gen = app.add_subcommand("gen", "Generate an object sequence in ROLiD layout");
  gen->add_option("-o,--out", gen_out, "Output directory");
  gen->add_option("--kind", gen_kind, "water_mist or smoke");
  gen->add_option("--seed", gen_seed, "64-bit seed");
  gen->add_option("--frames", gen_frames, "Sequence length K")->check(CLI::PositiveNumber);
  gen->add_option("--points", gen_points, "Points per frame");

  cli::Overrides fuse_ov, eval_ov, sweep_ov;
  std::string fuse_manifest, eval_manifest, sweep_manifest;
  auto* fuse_cmd = app.add_subcommand("fuse", "Write fused frames <frame>_<k>.bin and provenance.log");
  add_run_flags(fuse_cmd, fuse_ov, fuse_manifest);
  auto* eval_cmd = app.add_subcommand("eval", "Attack success rate for one configuration");
  add_run_flags(eval_cmd, eval_ov, eval_manifest);
  eval_cmd->add_flag("--mock-detector", eval_ov.mock_detector, "Use the built-in point-count detector");
  auto* sweep_cmd = app.add_subcommand("sweep", "Attack success rate over the manifest's grid");
  add_run_flags(sweep_cmd, sweep_ov, sweep_manifest);
  sweep_cmd->add_flag("--mock-detector", sweep_ov.mock_detector, "Use the built-in point-count detector");

  std::vector<std::string> audit_frames;
  std::optional<std::string> audit_model, audit_export;
  auto* audit = app.add_subcommand("roundtrip-audit", "Points lost by project -> backproject");
  audit->add_option("frames", audit_frames, "KITTI-style .bin frames")->required();
  audit->add_option("--model", audit_model, "Laser model file (default: 64-ring KITTI layout)");
  audit->add_option("--export", audit_export, "Directory for 16-bit PGM range images");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kInputError;
  }

  auto& out = std::cout;
  auto& err = std::cerr;
  if (*fit) return cli::cmd_fit({fit_frames.begin(), fit_frames.end()}, fit_out, fit_bins, out, err);
  if (*gen) {
    ObjectKind kind;
    try {
      kind = parse_object_kind(gen_kind);
    } catch (const std::invalid_argument& e) {
      err << "error: " << e.what() << '\n';
      return cli::kInputError;
    }
    return cli::cmd_gen(kind, gen_seed, gen_frames, gen_points, gen_out, out, err);
  }
  if (*fuse_cmd) return cli::cmd_fuse(fuse_manifest, fuse_ov, out, err);
  if (*eval_cmd) return cli::cmd_eval(eval_manifest, eval_ov, out, err);
  if (*sweep_cmd) return cli::cmd_sweep(sweep_manifest, sweep_ov, out, err);
  if (*audit) {
    std::optional<fs::path> model, exp;
    if (audit_model) model = *audit_model;
    if (audit_export) exp = *audit_export;
    return cli::cmd_roundtrip_audit({audit_frames.begin(), audit_frames.end()}, model, exp, out, err);
  }
  return cli::kInputError;
}
