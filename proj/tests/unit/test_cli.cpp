#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "tearing/data/ply.hpp"
#include "tearing/train/train.hpp"

using namespace tearing;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run tearnet(std::vector<std::string> args) {
  args.insert(args.begin(), "tearnet");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("tearing_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string s(const fs::path& p) { return p.string(); }

// synth -> pretrain -> finetune -> eval -> codes -> count -> dk on a tiny model.
void pipeline(const fs::path& root, const std::string& seed) {
  ASSERT_EQ(tearnet({"synth", "--preset", "kimo3-mini", "--train", "12", "--test", "16", "--points", "40", "--seed",
                     seed, "--out", s(root / "data")})
                .code,
            0);
  const auto manifest = s(root / "data" / "manifest.json");
  ASSERT_EQ(tearnet({"train", "--preset", "tiny", "--manifest", manifest, "--epochs", "2", "--seed", seed, "--out",
                     s(root / "pre")})
                .code,
            0);
  ASSERT_EQ(tearnet({"train", "--preset", "tiny", "--stage", "finetune", "--checkpoint", s(root / "pre" / "last.ckpt"),
                     "--manifest", manifest, "--epochs", "1", "--seed", seed, "--out", s(root / "fine")})
                .code,
            0);
  ASSERT_EQ(tearnet({"eval", "--checkpoint", s(root / "pre" / "last.ckpt"), "--checkpoint",
                     s(root / "fine" / "last.ckpt"), "--manifest", manifest, "--seed", seed, "--out", s(root / "eval")})
                .code,
            0);
  ASSERT_EQ(tearnet({"codes", "--checkpoint", s(root / "fine" / "last.ckpt"), "--manifest", manifest, "--seed", seed,
                     "--out", s(root / "codes")})
                .code,
            0);
  const auto codes = s(root / "codes" / "codes.csv");
  ASSERT_EQ(tearnet({"count", "--codes", codes, "--variant", "TearingNet", "--seed", seed, "--out", s(root / "count")})
                .code,
            0);
  ASSERT_EQ(tearnet({"dk", "--codes", codes, "--seed", seed, "--out", s(root / "dk")}).code, 0);
}

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(tearnet({}).code, cli::kUsage);
  EXPECT_EQ(tearnet({"frobnicate"}).code, cli::kUsage);
  EXPECT_EQ(tearnet({"synth", "--bogus", "1"}).code, cli::kUsage);
  const auto dir = scratch("usage");
  const auto no_seed = tearnet({"synth", "--preset", "torus16", "--out", s(dir)});
  EXPECT_EQ(no_seed.code, cli::kUsage);
  EXPECT_NE(no_seed.err.find("seed"), std::string::npos);
  EXPECT_EQ(tearnet({"synth", "--preset", "cubes", "--seed", "1", "--out", s(dir)}).code, cli::kUsage);
  EXPECT_EQ(tearnet({"synth", "--preset", "torus16", "--seed", "minus", "--out", s(dir)}).code, cli::kUsage);
  EXPECT_EQ(tearnet({"--help"}).code, cli::kOk);
}

TEST(Cli, MissingFilesAreIoErrors) {
  const auto dir = scratch("io");
  EXPECT_EQ(tearnet({"train", "--manifest", s(dir / "none.json"), "--seed", "1", "--out", s(dir)}).code, cli::kIo);
  EXPECT_EQ(tearnet({"count", "--codes", s(dir / "none.csv"), "--seed", "1", "--out", s(dir)}).code, cli::kIo);
  EXPECT_EQ(tearnet({"synth", "--config", s(dir / "none.json"), "--seed", "1", "--out", s(dir)}).code, cli::kIo);
  {
    std::ofstream os(dir / "junk.ckpt");
    os << "not a checkpoint";
  }
  ASSERT_EQ(tearnet({"synth", "--preset", "torus16", "--points", "20", "--seed", "1", "--out", s(dir / "d")}).code, 0);
  const auto r = tearnet({"eval", "--checkpoint", s(dir / "junk.ckpt"), "--manifest", s(dir / "d" / "manifest.json"),
                          "--seed", "1", "--out", s(dir / "e")});
  EXPECT_EQ(r.code, cli::kIo);
  EXPECT_NE(r.err.find("bad magic"), std::string::npos);
}

TEST(Cli, ArchitectureMismatchHasItsOwnCode) {
  const auto dir = scratch("mismatch");
  ASSERT_EQ(tearnet({"synth", "--preset", "torus16", "--points", "20", "--seed", "1", "--out", s(dir / "d")}).code, 0);
  const auto manifest = s(dir / "d" / "manifest.json");
  ASSERT_EQ(tearnet({"train", "--preset", "tiny", "--epochs", "0", "--manifest", manifest, "--seed", "1", "--out",
                     s(dir / "pre")})
                .code,
            0);
  const auto r = tearnet({"train", "--preset", "desk", "--stage", "finetune", "--checkpoint",
                          s(dir / "pre" / "last.ckpt"), "--manifest", manifest, "--seed", "1", "--out", s(dir / "f")});
  EXPECT_EQ(r.code, cli::kMismatch);
  EXPECT_NE(r.err.find("expected ["), std::string::npos) << r.err;
}

TEST(Cli, ConfigFileWithFlagOverrides) {
  const auto dir = scratch("config");
  {
    std::ofstream os(dir / "synth.json");
    os << R"({"preset": "torus16", "points": 30, "seed": 4})";
  }
  ASSERT_EQ(tearnet({"synth", "--config", s(dir / "synth.json"), "--points", "25", "--out", s(dir / "d")}).code, 0);
  const auto manifest = nlohmann::json::parse(slurp(dir / "d" / "manifest.json"));
  EXPECT_EQ(manifest["points"], 25);
  EXPECT_EQ(manifest["seed"], 4);
  const auto run = nlohmann::json::parse(slurp(dir / "d" / "run_manifest.json"));
  EXPECT_EQ(run["command"], "synth");
  EXPECT_EQ(run["config"]["points"], 25);
  EXPECT_EQ(run["seed"], 4);
  EXPECT_TRUE(run.contains("tool_version"));
  EXPECT_TRUE(run.contains("wall_time_seconds"));
  {
    std::ofstream os(dir / "bad.json");
    os << R"({"preset": "torus16", "pionts": 30})";
  }
  EXPECT_EQ(tearnet({"synth", "--config", s(dir / "bad.json"), "--seed", "1", "--out", s(dir / "e")}).code, cli::kUsage);
}

TEST(Cli, SynthTorusPresetWritesEveryCloud) {
  const auto dir = scratch("torus");
  ASSERT_EQ(tearnet({"synth", "--preset", "torus", "--points", "16", "--seed", "2", "--out", s(dir)}).code, 0);
  std::size_t ply = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir)) ply += e.path().extension() == ".ply";
  EXPECT_EQ(ply, 300u);
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
}

TEST(Cli, ReconstructUntrainedCheckpoint) {
  const auto dir = scratch("reconstruct");
  ASSERT_EQ(tearnet({"synth", "--preset", "two-object", "--points", "30", "--seed", "1", "--out", s(dir / "d")}).code,
            0);
  const auto manifest = s(dir / "d" / "manifest.json");
  ASSERT_EQ(tearnet({"train", "--preset", "tiny", "--epochs", "0", "--manifest", manifest, "--seed", "1", "--out",
                     s(dir / "pre")})
                .code,
            0);
  ASSERT_EQ(tearnet({"train", "--preset", "tiny", "--stage", "finetune", "--variant", "TearingNet3", "--epochs", "0",
                     "--checkpoint", s(dir / "pre" / "last.ckpt"), "--manifest", manifest, "--seed", "1", "--out",
                     s(dir / "t3")})
                .code,
            0);
  const auto r = tearnet({"reconstruct", "--checkpoint", s(dir / "t3" / "last.ckpt"), "--manifest", manifest,
                          "--split", "train", "--index", "1", "--seed", "1", "--out", s(dir / "rec")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto scene = dir / "rec" / "train_1";
  for (const char* f : {"input.ply", "x1.ply", "x2.ply", "x3.ply", "output.ply", "u0.csv", "u1.csv", "graph.csv",
                        "mesh.obj"}) {
    EXPECT_TRUE(fs::exists(scene / f)) << f;
  }
  EXPECT_EQ(read_ply(scene / "x3.ply").points.size(), 16u);
  EXPECT_EQ(slurp(scene / "u0.csv").substr(0, 10), "index,u,v\n");
  EXPECT_EQ(slurp(scene / "graph.csv").substr(0, 6), "i,j,w\n");
  EXPECT_TRUE(fs::exists(dir / "rec" / "run_manifest.json"));

  const auto bad = tearnet({"reconstruct", "--checkpoint", s(dir / "t3" / "last.ckpt"), "--manifest", manifest,
                            "--split", "train", "--index", "99", "--seed", "1", "--out", s(dir / "rec2")});
  EXPECT_EQ(bad.code, cli::kUsage);

  const auto rs = tearnet({"resample", "--checkpoint", s(dir / "t3" / "last.ckpt"), "--manifest", manifest, "--split",
                           "train", "--count", "50", "--seed", "1", "--out", s(dir / "rs")});
  ASSERT_EQ(rs.code, 0) << rs.err;
  EXPECT_EQ(read_ply(dir / "rs" / "train_0_resampled.ply").points.size(), 50u);
}

TEST(Cli, GradcheckPassesOnTinyPreset) {
  const auto r = tearnet({"gradcheck", "--preset", "tiny", "--seeds", "2", "--seed", "5"});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("max relative error"), std::string::npos);
  const auto strict = tearnet({"gradcheck", "--variant", "TearingNet", "--seeds", "1", "--tolerance", "1e-30", "--seed", "5"});
  EXPECT_EQ(strict.code, cli::kNumeric);
}

TEST(Cli, PipelineIsByteIdenticalAcrossRuns) {
  const auto a = scratch("pipe_a");
  const auto b = scratch("pipe_b");
  pipeline(a, "21");
  pipeline(b, "21");
  for (const char* f : {"eval/metrics.csv", "eval/eval_samples.csv", "codes/codes.csv", "count/count.csv", "dk/dk.csv",
                        "data/manifest.json", "data/playground/test/00003.ply"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  EXPECT_TRUE(load_model(a / "fine" / "last.ckpt").params == load_model(b / "fine" / "last.ckpt").params);
  const auto metrics = slurp(a / "eval" / "metrics.csv");
  EXPECT_NE(metrics.find("kimo3-mini,FoldingNet,"), std::string::npos);
  EXPECT_NE(metrics.find("kimo3-mini,TearingNet,"), std::string::npos);
  EXPECT_NE(slurp(a / "count" / "count.csv").find("count,TearingNet,mae,"), std::string::npos);
}
