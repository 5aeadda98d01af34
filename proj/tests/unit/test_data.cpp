#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "tearing/data/dataset.hpp"
#include "tearing/data/ply.hpp"
#include "tearing/metrics/metrics.hpp"

using namespace tearing;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("tearing_test_data_" + name);
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

double min_cross_distance(const PointCloud3& x, const std::vector<int>& label, int a, int b) {
  double best = 1e300;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (label[i] != a) continue;
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (label[j] == b) best = std::min(best, std::sqrt(distance2(x.points[i], x.points[j])));
    }
  }
  return best;
}

}  // namespace

TEST(Torus, SinglePointsSatisfyTheImplicitEquation) {
  TorusSpec spec;
  spec.ring_radius = 1.0;
  spec.tube_radius = 0.3;
  spec.count = 4096;
  const auto x = gen_torus_raw(spec);
  ASSERT_EQ(x.size(), 4096u);
  for (const auto& p : x.points) {
    const double rho = std::sqrt(p[0] * p[0] + p[1] * p[1]);
    EXPECT_NEAR((rho - 1.0) * (rho - 1.0) + p[2] * p[2], 0.09, 1e-9);
  }
}

TEST(Torus, AreaWeightingShiftsMassOutward) {
  // With density proportional to R + r cos(theta), E[rho - R] = r^2 / (2R).
  TorusSpec spec;
  spec.tube_radius = 0.3;
  spec.count = 4096;
  spec.seed = 17;
  const auto x = gen_torus_raw(spec);
  double sum = 0.0, sum2 = 0.0;
  for (const auto& p : x.points) {
    const double d = std::sqrt(p[0] * p[0] + p[1] * p[1]) - 1.0;
    sum += d;
    sum2 += d * d;
  }
  const double n = static_cast<double>(x.size());
  const double mean = sum / n;
  const double se = std::sqrt((sum2 / n - mean * mean) / n);
  EXPECT_NEAR(mean, 0.045, 5.0 * se);
  EXPECT_GT(mean, 5.0 * se);  // unweighted angles would centre on zero
}

TEST(Torus, SameSeedSameCloudAndGenusChecked) {
  TorusSpec spec;
  spec.genus = 3;
  spec.seed = 5;
  EXPECT_EQ(gen_torus(spec), gen_torus(spec));
  spec.seed = 6;
  TorusSpec other = spec;
  other.seed = 7;
  EXPECT_NE(gen_torus(spec), gen_torus(other));
  spec.genus = 0;
  EXPECT_THROW(gen_torus(spec), DataError);
  spec.genus = 4;
  EXPECT_THROW(gen_torus(spec), DataError);
}

TEST(Torus, ChainedLinksAreDisjointAndNormalized) {
  for (int g = 1; g <= 3; ++g) {
    TorusSpec spec;
    spec.genus = g;
    spec.count = 1500;
    spec.seed = 40 + g;
    const auto raw = gen_torus_raw(spec);
    std::vector<int> link(raw.size());
    const std::size_t share = spec.count / g;
    for (std::size_t i = 0; i < raw.size(); ++i) link[i] = static_cast<int>(std::min<std::size_t>(i / share, g - 1));
    for (int a = 0; a < g; ++a) {
      for (int b = a + 1; b < g; ++b) {
        // Ring cores are 2/3 apart, so tube surfaces at least 2/3 - 2r.
        EXPECT_GE(min_cross_distance(raw, link, a, b), 2.0 / 3.0 - 0.5 - 1e-9);
      }
    }
    const auto x = gen_torus(spec);
    double r = 0.0;
    for (const auto& p : x.points) r = std::max(r, std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]));
    EXPECT_NEAR(r, 1.0, 1e-12);
  }
}

TEST(Shapes, EverySampleIsNormalizedWithTheRequestedCount) {
  Rng rng(3);
  for (auto kind : kShapeKinds) {
    const auto x = sample_shape(kind, 777, rng);
    ASSERT_EQ(x.size(), 777u);
    double r = 0.0;
    for (const auto& p : x.points) r = std::max(r, std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]));
    EXPECT_NEAR(r, 1.0, 1e-12) << shape_name(kind);
    EXPECT_EQ(parse_shape(shape_name(kind)), kind);
  }
  EXPECT_THROW(parse_shape("pyramid"), DataError);
}

TEST(Scene, SingleObjectStaysInItsCell) {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const auto spec = random_scene(3, 1, 2048, rng);
    const auto scene = gen_scene(spec);
    ASSERT_EQ(scene.points.size(), 2048u);
    const double w = 2.0 / 3.0;
    const auto& o = spec.objects[0];
    for (const auto& p : scene.points.points) {
      EXPECT_GE(p[0], -1.0 + o.col * w);
      EXPECT_LE(p[0], -1.0 + (o.col + 1) * w);
      EXPECT_GE(p[1], -1.0 + o.row * w);
      EXPECT_LE(p[1], -1.0 + (o.row + 1) * w);
    }
  }
}

TEST(Scene, OppositeCornersAreAnEmptyCellApart) {
  SceneSpec spec;
  spec.playground = 3;
  spec.objects = {{ShapeKind::kBox, 0, 0, 1.0, 0.3}, {ShapeKind::kSphere, 2, 2, 1.0, 1.1}};
  const auto scene = gen_scene(spec);
  EXPECT_GE(min_cross_distance(scene.points, scene.object_of, 0, 1), 2.0 / 3.0);
}

TEST(Scene, CountsAreBalancedAndObjectsSeparated) {
  Rng rng(5);
  for (std::size_t k = 1; k <= 9; ++k) {
    const auto spec = random_scene(3, k, 2048, rng);
    const auto scene = gen_scene(spec);
    std::vector<std::size_t> counts(k, 0);
    for (int o : scene.object_of) ++counts[o];
    const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
    EXPECT_LE(*hi - *lo, 1u);
    if (k <= 4) {
      for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a + 1; b < k; ++b) {
          // Objects fill 80% of a cell: at least 20% of a cell between neighbours.
          EXPECT_GE(min_cross_distance(scene.points, scene.object_of, a, b), 0.2 * 2.0 / 3.0 - 1e-12);
        }
      }
    }
  }
}

TEST(Scene, InvalidSpecsRejected) {
  Rng rng(6);
  EXPECT_THROW(random_scene(3, 10, 2048, rng), DataError);
  SceneSpec spec;
  spec.playground = 2;
  spec.objects = {{ShapeKind::kBox, 0, 0, 1.0, 0.0}, {ShapeKind::kCone, 0, 0, 1.0, 0.0}};
  EXPECT_THROW(gen_scene(spec), DataError);
  spec.objects = {{ShapeKind::kBox, 2, 0, 1.0, 0.0}};
  EXPECT_THROW(gen_scene(spec), DataError);
}

TEST(Ply, RoundTripIsExactAtFloatPrecision) {
  const auto dir = scratch("ply");
  Rng rng(7);
  PlyCloud cloud;
  for (int i = 0; i < 300; ++i) {
    cloud.points.points.push_back({static_cast<float>(rng.normal()), static_cast<float>(rng.normal() * 1e-7),
                                   static_cast<float>(rng.normal() * 1e5)});
    cloud.attribute.push_back(i % 7);
  }
  cloud.attribute_name = "object";
  write_ply(dir / "a.ply", cloud);
  const auto back = read_ply(dir / "a.ply");
  EXPECT_EQ(back.points, cloud.points);
  EXPECT_EQ(back.attribute, cloud.attribute);
  EXPECT_EQ(back.attribute_name, cloud.attribute_name);
}

TEST(Ply, EmptyCloudIsValid) {
  const auto dir = scratch("ply_empty");
  write_ply(dir / "e.ply", PointCloud3{});
  EXPECT_TRUE(read_ply(dir / "e.ply").points.empty());
}

TEST(Ply, TruncatedFileNamesTheCounts) {
  const auto dir = scratch("ply_trunc");
  std::ofstream(dir / "t.ply") << "ply\nformat ascii 1.0\nelement vertex 5\nproperty float x\n"
                                  "property float y\nproperty float z\nend_header\n0 0 0\n1 1 1\n2 2 2\n";
  try {
    read_ply(dir / "t.ply");
    FAIL();
  } catch (const PlyError& e) {
    EXPECT_NE(std::string(e.what()).find("expected 5 vertices, found 3"), std::string::npos) << e.what();
  }
}

TEST(Ply, MalformedHeaderGivesTheLine) {
  const auto dir = scratch("ply_bad");
  std::ofstream(dir / "b.ply") << "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float q\n";
  try {
    read_ply(dir / "b.ply");
    FAIL();
  } catch (const PlyError& e) {
    EXPECT_NE(std::string(e.what()).find("b.ply:5:"), std::string::npos) << e.what();
  }
  std::ofstream(dir / "c.ply") << "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\n"
                                  "property float z\nend_header\n1 2 zz\n";
  try {
    read_ply(dir / "c.ply");
    FAIL();
  } catch (const PlyError& e) {
    EXPECT_NE(std::string(e.what()).find("c.ply:8:"), std::string::npos) << e.what();
  }
  EXPECT_THROW(read_ply(dir / "missing.ply"), PlyError);
}

TEST(Dataset, PresetSizes) {
  const auto kimo = plan_dataset("kimo3-mini", 1);
  EXPECT_EQ(kimo["splits"]["train"].size(), 300u);
  EXPECT_EQ(kimo["splits"]["test"].size(), 60u);
  EXPECT_EQ(kimo["constants"]["playground"], 3);
  std::vector<int> seen(10, 0);
  for (const auto& item : kimo["splits"]["train"]) ++seen[item["k"].get<int>()];
  for (int k = 1; k <= 9; ++k) EXPECT_GT(seen[k], 10) << k;

  const auto torus = plan_dataset("torus", 1);
  EXPECT_EQ(torus["splits"]["train"].size(), 300u);
  EXPECT_FALSE(torus["splits"].contains("test"));
  std::vector<int> genus(4, 0);
  for (const auto& item : torus["splits"]["train"]) ++genus[item["genus"].get<int>()];
  for (int g = 1; g <= 3; ++g) EXPECT_GT(genus[g], 70);
  EXPECT_THROW(plan_dataset("modelnet", 1), DataError);
}

TEST(Dataset, WrittenFilesAreReproducibleAndLoadBack) {
  const auto a = scratch("ds_a"), b = scratch("ds_b");
  DatasetOptions opt;
  opt.points = 128;
  const auto m = plan_dataset("two-object", 9, opt);
  write_dataset(m, a);
  write_dataset(read_manifest(a / "manifest.json"), b);
  for (const auto& item : m["splits"]["train"]) {
    const auto file = item["file"].get<std::string>();
    EXPECT_EQ(slurp(a / file), slurp(b / file)) << file;
  }
  EXPECT_EQ(slurp(a / "manifest.json"), slurp(b / "manifest.json"));

  const auto samples = load_split(a / "manifest.json", "train");
  ASSERT_EQ(samples.size(), 16u);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto direct = generate_item(m["splits"]["train"][i]);
    EXPECT_EQ(samples[i].points, direct.points);
    EXPECT_EQ(samples[i].object_of, direct.object_of);
    EXPECT_EQ(samples[i].k, static_cast<int>(i % 2 + 1));
  }
  EXPECT_THROW(load_split(a / "manifest.json", "test"), DataError);
}

TEST(Dataset, LabelMismatchRejected) {
  const auto dir = scratch("ds_bad");
  DatasetOptions opt;
  opt.points = 64;
  opt.train = 2;
  auto m = plan_dataset("two-object", 3, opt);
  write_dataset(m, dir);
  m["splits"]["train"][1]["k"] = 3;
  std::ofstream(dir / "manifest.json") << m.dump(2);
  EXPECT_THROW(load_split(dir / "manifest.json", "train"), DataError);
}
