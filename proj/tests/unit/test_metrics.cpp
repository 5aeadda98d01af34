#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tearing/metrics/chamfer_op.hpp"
#include "tearing/metrics/metrics.hpp"
#include "tearing/numeric/gradcheck.hpp"

using namespace tearing;

namespace {

PointCloud3 cloud(std::initializer_list<Point3> pts) { return PointCloud3{std::vector<Point3>(pts)}; }

PointCloud3 random_cloud(std::size_t n, Rng& rng) {
  PointCloud3 x;
  for (std::size_t i = 0; i < n; ++i) x.points.push_back({rng.normal(), rng.normal(), rng.normal()});
  return x;
}

// Plain double loops with sqrt on every pair; shares no code with the library.
double loop_directed(const PointCloud3& a, const PointCloud3& b) {
  double sum = 0.0;
  for (const auto& p : a.points) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : b.points) {
      best = std::min(best, std::sqrt((p[0] - q[0]) * (p[0] - q[0]) + (p[1] - q[1]) * (p[1] - q[1]) +
                                      (p[2] - q[2]) * (p[2] - q[2])));
    }
    sum += best;
  }
  return sum / static_cast<double>(a.size());
}

double loop_chamfer(const PointCloud3& a, const PointCloud3& b) {
  return std::max(loop_directed(a, b), loop_directed(b, a));
}

double factorial_emd(const PointCloud3& a, const PointCloud3& b) {
  std::vector<std::size_t> perm(a.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto& p = a.points[i];
      const auto& q = b.points[perm[i]];
      s += std::sqrt((p[0] - q[0]) * (p[0] - q[0]) + (p[1] - q[1]) * (p[1] - q[1]) + (p[2] - q[2]) * (p[2] - q[2]));
    }
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(a.size());
}

Tensor<double> as_tensor(const PointCloud3& x) {
  Tensor<double> t(Shape{x.size(), 3});
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (int k = 0; k < 3; ++k) t.at(i, k) = x.points[i][k];
  }
  return t;
}

}  // namespace

TEST(Chamfer, IdenticalCloudsAreZero) {
  Rng rng(1);
  const auto x = random_cloud(50, rng);
  EXPECT_EQ(chamfer_aug(x, x), 0.0);
}

TEST(Chamfer, SinglePair) { EXPECT_EQ(chamfer_aug(cloud({{0, 0, 0}}), cloud({{1, 0, 0}})), 1.0); }

TEST(Chamfer, MaxOfDirectedTerms) {
  EXPECT_EQ(chamfer_aug(cloud({{0, 0, 0}, {2, 0, 0}}), cloud({{0, 0, 0}})), 1.0);
}

TEST(Chamfer, EmptyRejected) {
  EXPECT_THROW(chamfer_aug(PointCloud3{}, cloud({{0, 0, 0}})), MetricError);
  EXPECT_THROW(chamfer_aug(cloud({{0, 0, 0}}), PointCloud3{}), MetricError);
}

TEST(Chamfer, MatchesDoubleLoop) {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = random_cloud(1 + rng.below(64), rng);
    const auto b = random_cloud(1 + rng.below(64), rng);
    EXPECT_NEAR(chamfer_aug(a, b), loop_chamfer(a, b), 1e-12);
  }
}

TEST(Chamfer, SymmetricAndDominatesDirectedTerms) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = random_cloud(1 + rng.below(40), rng);
    const auto b = random_cloud(1 + rng.below(40), rng);
    const double c = chamfer_aug(a, b);
    EXPECT_EQ(c, chamfer_aug(b, a));
    EXPECT_GE(c, directed_chamfer(a, b));
    EXPECT_GE(c, directed_chamfer(b, a));
    EXPECT_GT(c, 0.0);
  }
}

TEST(Chamfer, ZeroForEqualSetsWithDuplicates) {
  const auto a = cloud({{0, 0, 0}, {1, 1, 1}, {1, 1, 1}});
  const auto b = cloud({{1, 1, 1}, {0, 0, 0}});
  EXPECT_EQ(chamfer_aug(a, b), 0.0);
}

TEST(ChamferOp, ValueMatchesPlainMetricInDouble) {
  Rng rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const auto a = random_cloud(1 + rng.below(64), rng);
    const auto b = random_cloud(1 + rng.below(64), rng);
    Tape<double> tape;
    Var l = chamfer_aug_op(tape, tape.constant(as_tensor(a)), tape.constant(as_tensor(b)));
    EXPECT_EQ(tape.value(l).item(), chamfer_aug(a, b));
  }
}

TEST(ChamferOp, GradientsMatchFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    ParameterStore<double> params;
    params.add("x", as_tensor(random_cloud(5 + rng.below(10), rng)));
    params.add("x_hat", as_tensor(random_cloud(5 + rng.below(10), rng)));
    const LossBuilder loss = [](Tape<double>& t, const BoundParameters<double>& p) {
      return chamfer_aug_op(t, p["x"], p["x_hat"]);
    };
    const auto r = gradient_check(params, loss);
    EXPECT_LE(r.max_relative_error, 1e-4) << "seed " << seed << " " << r.worst_parameter;
  }
}

TEST(ChamferOp, TieBetweenTermsRoutesThroughReconstruction) {
  // Both directed terms equal 1; only x_hat should receive gradient.
  Tape<double> tape;
  Var x = tape.variable(as_tensor(cloud({{0, 0, 0}})));
  Var xh = tape.variable(as_tensor(cloud({{1, 0, 0}})));
  Var l = chamfer_aug_op(tape, x, xh);
  tape.backward(l);
  EXPECT_EQ(tape.grad(xh).at(0, 0), 1.0);
  // x also receives the pair's reaction through the x_hat -> x term.
  EXPECT_EQ(tape.grad(x).at(0, 0), -1.0);

  Tape<double> t2;
  Var a = t2.variable(as_tensor(cloud({{0, 0, 0}, {2, 0, 0}})));
  Var b = t2.variable(as_tensor(cloud({{0, 0, 0}})));
  t2.backward(chamfer_aug_op(t2, a, b));
  // x -> x_hat term is active (1 > 0): the far input point pulls x_hat.
  EXPECT_EQ(t2.grad(a).at(1, 0), 0.5);
  EXPECT_EQ(t2.grad(b).at(0, 0), -0.5);
}

TEST(ChamferOp, FloatAgreesWithDouble) {
  Rng rng(5);
  const auto a = random_cloud(40, rng);
  const auto b = random_cloud(30, rng);
  Tape<float> tape;
  Var l = chamfer_aug_op(tape, tape.constant(as_tensor(a).cast<float>()), tape.constant(as_tensor(b).cast<float>()));
  EXPECT_NEAR(tape.value(l).item(), chamfer_aug(a, b), 1e-5);
}

TEST(Emd, IdenticalIsZero) {
  Rng rng(6);
  const auto x = random_cloud(20, rng);
  EXPECT_EQ(emd(x, x), 0.0);
}

TEST(Emd, SwappedPairIsZero) {
  const auto a = cloud({{0, 0, 0}, {1, 2, 3}});
  const auto b = cloud({{1, 2, 3}, {0, 0, 0}});
  EXPECT_EQ(emd(a, b), 0.0);
}

TEST(Emd, MatchesFactorialBruteForce) {
  Rng rng(7);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 1 + rng.below(7);
    const auto a = random_cloud(n, rng);
    const auto b = random_cloud(n, rng);
    EXPECT_NEAR(emd(a, b), factorial_emd(a, b), 1e-12) << "n=" << n;
  }
}

TEST(Emd, DominatesSmallerDirectedChamfer) {
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + rng.below(64);
    const auto a = random_cloud(n, rng);
    const auto b = random_cloud(n, rng);
    const double lower = std::min(directed_chamfer(a, b), directed_chamfer(b, a));
    EXPECT_GE(emd(a, b), lower - 1e-12);
  }
}

TEST(Emd, RejectsUnequalSizesAndOversizedInput) {
  Rng rng(9);
  EXPECT_THROW(emd(random_cloud(3, rng), random_cloud(4, rng)), MetricError);
  EXPECT_THROW(emd(random_cloud(10, rng), random_cloud(10, rng), 8), MetricError);
}

TEST(Emd, SubsampledVersionIsDeterministic) {
  Rng rng(10);
  const auto a = random_cloud(300, rng);
  const auto b = random_cloud(200, rng);
  EXPECT_EQ(emd_subsampled(a, b, 64, 3), emd_subsampled(a, b, 64, 3));
  EXPECT_EQ(emd_subsampled(a, a, 500, 3), 0.0);
}

TEST(NNIndex, IndexedPointFindsItself) {
  Rng rng(11);
  const auto x = random_cloud(200, rng);
  const NNIndex index(x.points);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto nb = index.query(x.points[i]);
    EXPECT_EQ(nb.index, i);
    EXPECT_EQ(nb.distance, 0.0);
  }
}

TEST(NNIndex, TieGoesToLowerIndex) {
  const NNIndex index({{1, 0, 0}, {-1, 0, 0}});
  EXPECT_EQ(index.query({0, 0, 0}).index, 0u);
  const NNIndex reversed({{-1, 0, 0}, {1, 0, 0}, {-1, 0, 0}});
  EXPECT_EQ(reversed.query({0, 0, 0}).index, 0u);
  EXPECT_EQ(reversed.query({-1, 0, 0}).index, 0u);
}

TEST(NNIndex, EmptyRejected) { EXPECT_THROW(NNIndex(std::vector<Point3>{}), MetricError); }

TEST(NNIndex, AgreesWithBruteForceOnRandomAndLatticeQueries) {
  Rng rng(12);
  // A lattice makes equidistant candidates common, exercising the tie rule.
  std::vector<Point3> lattice;
  for (int a = 0; a < 6; ++a) {
    for (int b = 0; b < 6; ++b) {
      for (int c = 0; c < 6; ++c) lattice.push_back({double(a), double(b), double(c)});
    }
  }
  rng.shuffle(lattice);
  lattice.insert(lattice.end(), lattice.begin(), lattice.begin() + 20);  // duplicates
  for (const auto& pts : {random_cloud(2000, rng).points, lattice}) {
    const NNIndex tree(pts, NNIndex::Kind::kKdTree);
    for (int q = 0; q < 10000; ++q) {
      Point3 p;
      if (pts.size() == lattice.size()) {
        p = {0.5 * double(rng.below(12)), 0.5 * double(rng.below(12)), 0.5 * double(rng.below(12))};
      } else {
        p = {rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
      }
      std::size_t best = 0;
      double best_d2 = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const double d2 = (p[0] - pts[i][0]) * (p[0] - pts[i][0]) + (p[1] - pts[i][1]) * (p[1] - pts[i][1]) +
                          (p[2] - pts[i][2]) * (p[2] - pts[i][2]);
        if (d2 < best_d2) {
          best_d2 = d2;
          best = i;
        }
      }
      const auto nb = tree.query(p);
      ASSERT_EQ(nb.index, best);
      ASSERT_EQ(nb.distance, std::sqrt(best_d2));
    }
  }
}
