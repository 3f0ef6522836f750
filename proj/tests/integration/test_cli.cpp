#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "mistfuse/cli/commands.hpp"
#include "mistfuse/mistfuse.hpp"
#include "support/fixtures.hpp"

using namespace mistfuse;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun run_cli(const std::string& args, const fs::path& cwd) {
  const fs::path log = cwd / "cli_output.txt";
  const std::string cmd = "cd '" + cwd.string() + "' && '" + std::string(MISTFUSE_CLI_PATH) + "' " + args + " > '" +
                          log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.out = ss.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

/// Three ray-cast frames, labels, a model file and a base manifest.
class CliDataset : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    root = fs::temp_directory_path() / (std::string("mistfuse_cli_") + info->name());
    fs::remove_all(root);
    fs::create_directories(root / "data");
    model = fixture::attack_model();
    write_laser_model(root / "model.txt", model);
    const double bearings[] = {0.0, 0.2, -0.25};
    for (int i = 0; i < 3; ++i) {
      const std::string id = "00000" + std::to_string(i);
      const BoundingBox3D car = fixture::car(8.0 + i, bearings[i], bearings[i]);
      fixture::SceneSpec spec;
      spec.boxes = {car};
      spec.azimuth_window = 2.0;
      write_kitti_bin(root / "data" / (id + ".bin"), fixture::raycast_scene(model, spec));
      write_labels(root / "data" / (id + ".txt"), {car});
      ids.push_back(id);
    }
  }

  void TearDown() override {
    if (!HasFailure()) fs::remove_all(root);
  }

  fs::path manifest(const std::string& name, const std::string& extra, const std::string& out = "out") {
    const fs::path p = root / name;
    std::ofstream(p) << "dataset_root = data\nframes = 000000, 000001, 000002\noutput_dir = " << out
                     << "\nseed = 1234\nmodel = model.txt\nmode = head_tail_side\nd_h = 0.5\nd_v = 0.5\n"
                        "point_count = 20000\nmock_threshold = 40\n"
                     << extra;
    return p;
  }

  fs::path root;
  LaserModel model;
  std::vector<std::string> ids;
};

}  // namespace

TEST(CliFit, RecoversGeneratorParameters) {
  const fs::path dir = fs::temp_directory_path() / "mistfuse_cli_fit";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::vector<LaserRing> rings{{0.06, 0.15}, {0.0, 0.1}, {-0.08, 0.05}, {-0.2, 0.0}};
  write_kitti_bin(dir / "raw.bin", fixture::capture_rings(rings, 400, 2.0, 40.0, 0.0, 3));
  const CliRun r = run_cli("fit raw.bin -o fitted.txt --bins 1024", dir);
  ASSERT_EQ(r.code, 0) << r.out;
  const LaserModel m = read_laser_model(dir / "fitted.txt");
  ASSERT_EQ(m.ring_count(), 4);
  EXPECT_EQ(m.azimuth_bins, 1024);
  for (int i = 0; i < 4; ++i) {
    // Frames are stored as float32, so recovery is limited by that rounding.
    EXPECT_NEAR(m.rings[i].inclination, rings[i].inclination, 1e-5);
    EXPECT_NEAR(m.rings[i].height, rings[i].height, 1e-4);
  }
}

TEST(CliFit, SingleRingAndMissingFile) {
  const fs::path dir = fs::temp_directory_path() / "mistfuse_cli_fit1";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_kitti_bin(dir / "one.bin", fixture::capture_rings({{-0.05, 0.0}}, 200, 2.0, 30.0, 0.0, 4));
  CliRun r = run_cli("fit one.bin -o one.txt", dir);
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(read_laser_model(dir / "one.txt").ring_count(), 1);

  r = run_cli("fit nothere.bin -o x.txt", dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("nothere.bin"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "x.txt"));
}

TEST(CliArgs, UnknownFlagIsInputError) {
  EXPECT_EQ(run_cli("sweep --bogus", fs::temp_directory_path()).code, 2);
  EXPECT_EQ(run_cli("", fs::temp_directory_path()).code, 2);
}

TEST(CliGen, WritesLoadableSequence) {
  const fs::path dir = fs::temp_directory_path() / "mistfuse_cli_gen";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const CliRun r = run_cli("gen --kind smoke --seed 9 --frames 4 --points 128 -o seq", dir);
  ASSERT_EQ(r.code, 0) << r.out;
  const SequenceSample s = load_rolid(dir / "seq");
  EXPECT_EQ(s.size(), 4);
  EXPECT_EQ(s.kind, ObjectKind::smoke);
  EXPECT_EQ(s.frames[0].size(), 128u);
  EXPECT_EQ(run_cli("gen --kind fog -o seq2", dir).code, 2);
}

TEST_F(CliDataset, FuseWritesFramesTimesK) {
  manifest("m.txt", "");
  const CliRun run = run_cli("fuse m.txt", root);
  ASSERT_EQ(run.code, 0) << run.out;
  std::size_t bins = 0;
  for (const auto& e : fs::directory_iterator(root / "out")) bins += e.path().extension() == ".bin" ? 1 : 0;
  EXPECT_EQ(bins, 9u);
  for (const auto& id : ids)
    for (int k = 0; k < 3; ++k) EXPECT_TRUE(fs::exists(root / "out" / (id + "_" + std::to_string(k) + ".bin")));
  const std::string prov = slurp(root / "out" / "provenance.log");
  EXPECT_EQ(prov.substr(0, prov.find('\n')), "frame,k,object_pre_gate,object_post_gate,object_visible,status");
  EXPECT_EQ(count_lines(prov), 10u);
  EXPECT_NE(prov.find("000001,2,20000,"), std::string::npos);
}

TEST_F(CliDataset, ZeroDensityFuseIsRenderedScene) {
  manifest("m.txt", "");
  const CliRun run = run_cli("fuse m.txt --dh 0 --dv 0", root);
  ASSERT_EQ(run.code, 0) << run.out;
  for (const auto& id : ids) {
    const std::string expected = encode_kitti_bin(render(read_kitti_bin(root / "data" / (id + ".bin")), model));
    for (int k = 0; k < 3; ++k) EXPECT_EQ(slurp(root / "out" / (id + "_" + std::to_string(k) + ".bin")), expected);
  }
  EXPECT_NE(slurp(root / "out" / "provenance.log").find(",0,0,empty_object"), std::string::npos);
}

TEST_F(CliDataset, InfeasibleModeLoggedAndSkipped) {
  manifest("m.txt", "");
  const CliRun run = run_cli("fuse m.txt --mode corner_point", root);
  ASSERT_EQ(run.code, 0) << run.out;
  const std::string prov = slurp(root / "out" / "provenance.log");
  EXPECT_NE(prov.find("000000,-,0,0,0,infeasible_mode"), std::string::npos);
}

TEST_F(CliDataset, FuseIsDeterministic) {
  manifest("a.txt", "", "out_a");
  manifest("b.txt", "", "out_b");
  ASSERT_EQ(run_cli("fuse a.txt --jobs 3", root).code, 0);
  ASSERT_EQ(run_cli("fuse b.txt", root).code, 0);
  for (const auto& e : fs::directory_iterator(root / "out_a")) {
    EXPECT_EQ(slurp(e.path()), slurp(root / "out_b" / e.path().filename())) << e.path();
  }
}

TEST_F(CliDataset, SeedChangesObject) {
  manifest("a.txt", "", "out_a");
  ASSERT_EQ(run_cli("fuse a.txt", root).code, 0);
  ASSERT_EQ(run_cli("fuse a.txt --seed 99 --jobs 2", root).code, 0);
  manifest("b.txt", "", "out_b");
  ASSERT_EQ(run_cli("fuse b.txt", root).code, 0);
  EXPECT_NE(slurp(root / "out_a" / "000000_0.bin"), slurp(root / "out_b" / "000000_0.bin"));
}

TEST_F(CliDataset, AngleSweepHasNineRows) {
  manifest("m.txt", "grid.angles = -40, -20, -10, -5, 0, 5, 10, 20, 40\n");
  const CliRun run = run_cli("sweep m.txt --mock-detector", root);
  ASSERT_LE(run.code, 1) << run.out;
  const std::string csv = slurp(root / "out" / "sweep.csv");
  EXPECT_EQ(count_lines(csv), 10u);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "mode,d_h,d_v,angle_deg,frames,detected,successes,asr");
  EXPECT_NE(csv.find("head_tail_side,0.5,0.5,-40,9,"), std::string::npos);
}

TEST_F(CliDataset, DensitySweepHasFiveRows) {
  manifest("m.txt", "grid.d_h = 0.1, 0.2, 0.3, 0.4, 0.5\n");
  const CliRun run = run_cli("sweep m.txt --mock-detector --jobs 2", root);
  ASSERT_LE(run.code, 1) << run.out;
  EXPECT_EQ(count_lines(slurp(root / "out" / "sweep.csv")), 6u);
}

TEST_F(CliDataset, SingletonGridEqualsEval) {
  manifest("m.txt", "");
  const CliRun e = run_cli("eval m.txt --mock-detector", root);
  const CliRun s = run_cli("sweep m.txt --mock-detector", root);
  ASSERT_EQ(e.code, s.code) << e.out << s.out;
  EXPECT_EQ(slurp(root / "out" / "eval.csv"), slurp(root / "out" / "sweep.csv"));
}

TEST_F(CliDataset, UndefinedAsrExitsOne) {
  manifest("m.txt", "mock_threshold = 1000000\n");
  const CliRun run = run_cli("eval m.txt --mock-detector", root);
  EXPECT_EQ(run.code, 1) << run.out;
  EXPECT_NE(slurp(root / "out" / "eval.csv").find("undefined"), std::string::npos);
}

TEST_F(CliDataset, BadManifestIsInputError) {
  EXPECT_EQ(run_cli("fuse absent.txt", root).code, 2);
  manifest("m.txt", "");
  EXPECT_EQ(run_cli("fuse m.txt --dh 0.9", root).code, 2);
  EXPECT_EQ(run_cli("fuse m.txt --mode roof", root).code, 2);
  std::ofstream(root / "bad.txt") << "dataset_root = data\nframes = 000000, 000777\noutput_dir = out\n";
  const CliRun r = run_cli("fuse bad.txt", root);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("000777"), std::string::npos);
  EXPECT_EQ(run_cli("eval m.txt", root).code, 2);  // neither detections nor mock
}

TEST_F(CliDataset, FileDetectionsDriveEval) {
  // Interchange files written from the mock reproduce the mock's result.
  manifest("m.txt", "detections_dir = dets\n");
  const cli::RunManifest m = cli::RunManifest::load(root / "m.txt");
  const MockDetector mock(m.mock_threshold);
  const SequenceSample seq = m.object_sequence();
  for (const auto& id : ids) {
    const SweepFrame f = m.load_frame(id);
    fs::create_directories(root / "dets" / "baseline");
    write_detections(root / "dets" / "baseline" / (id + ".json"), mock.baseline(f, m.model));
    const FusionResult r = fuse(f.scene, seq, f.target, m.config, m.model);
    fs::create_directories(root / "dets" / cell_key(m.config));
    for (std::size_t k = 0; k < r.frames.size(); ++k) {
      write_detections(root / "dets" / cell_key(m.config) / (fused_frame_name(id, static_cast<int>(k)) + ".json"),
                       mock.adversarial(f, m.config, static_cast<int>(k), r.frames[k]));
    }
  }
  const CliRun files = run_cli("eval m.txt", root);
  const std::string from_files = slurp(root / "out" / "eval.csv");
  const CliRun mocked = run_cli("eval m.txt --mock-detector", root);
  ASSERT_EQ(files.code, mocked.code) << files.out;
  EXPECT_EQ(from_files, slurp(root / "out" / "eval.csv"));

  // A missing fused-frame file aborts with its frame id.
  fs::remove(root / "dets" / cell_key(m.config) / "000001_2.json");
  const CliRun missing = run_cli("eval m.txt", root);
  EXPECT_EQ(missing.code, 2);
  EXPECT_NE(missing.out.find("000001"), std::string::npos);
}

TEST_F(CliDataset, ScoreOfExactlyHalfIsNotADetection) {
  manifest("m.txt", "detections_dir = dets\n");
  const cli::RunManifest m = cli::RunManifest::load(root / "m.txt");
  fs::create_directories(root / "dets" / "baseline");
  fs::create_directories(root / "dets" / cell_key(m.config));
  for (const auto& id : ids) {
    const SweepFrame f = m.load_frame(id);
    write_detections(root / "dets" / "baseline" / (id + ".json"), {id, "bridge", {{f.target, 0.5}}});
    for (int k = 0; k < 3; ++k) {
      write_detections(root / "dets" / cell_key(m.config) / (fused_frame_name(id, k) + ".json"), {id, "bridge", {}});
    }
  }
  EXPECT_EQ(read_detections(root / "dets" / "baseline" / "000000.json").detections[0].confidence, 0.5);
  const CliRun r = run_cli("eval m.txt", root);
  EXPECT_EQ(r.code, 1) << r.out;
}

TEST_F(CliDataset, RoundtripAudit) {
  const CliRun r = run_cli("roundtrip-audit data/000000.bin data/000001.bin --model model.txt --export img", root);
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("000000,"), std::string::npos);
  EXPECT_TRUE(fs::exists(root / "img" / "000001.pgm"));
  EXPECT_TRUE(fs::exists(root / "img" / "000001.pgm.model.txt"));
  EXPECT_EQ(run_cli("roundtrip-audit data/zzz.bin", root).code, 2);
}
