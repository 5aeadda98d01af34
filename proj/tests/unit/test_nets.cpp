#include <gtest/gtest.h>

#include <algorithm>

#include "tearing/metrics/chamfer_op.hpp"
#include "tearing/nets/network.hpp"
#include "tearing/numeric/gradcheck.hpp"
#include "tearing/numeric/ops.hpp"

using namespace tearing;

namespace {

const Variant kAll[] = {Variant::kFoldingNet,   Variant::kCascadedF,      Variant::kTearingNet,
                        Variant::kTearingNetTF, Variant::kTearingNetNoGF, Variant::kTearingNet3};

ModelConfig tiny(Variant v) { return {v, preset_architecture("tiny")}; }

PointCloud3 random_cloud(std::size_t n, Rng& rng) {
  PointCloud3 x;
  for (std::size_t i = 0; i < n; ++i) x.points.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
  return x;
}

// Every tensor random, including T's zero-initialised output layer.
ParameterStore<double> random_params(const ModelConfig& cfg, Rng& rng) {
  ParameterStore<double> p;
  for (const auto& [name, shape] : parameter_layout(cfg)) {
    Tensor<double> t(shape);
    for (auto& v : t.values()) v = rng.uniform(-0.6, 0.6);
    p.add(name, std::move(t));
  }
  return p;
}

Tensor<double> codeword_of(const ParameterStore<double>& params, const ModelConfig& cfg, const PointCloud3& x) {
  Tape<double> tape;
  BoundParameters<double> p(tape, params);
  return tape.value(encode(tape, p, tape.constant(cloud_tensor<double>(x)), cfg.arch));
}

}  // namespace

TEST(Model, VariantNamesRoundTrip) {
  for (auto v : kAll) EXPECT_EQ(parse_variant(variant_name(v)), v);
  EXPECT_THROW(parse_variant("AtlasNet"), std::invalid_argument);
}

TEST(Model, ConfigJsonRoundTrip) {
  for (const char* preset : {"tiny", "desk", "full"}) {
    ModelConfig cfg{Variant::kTearingNet3, preset_architecture(preset)};
    const auto back = model_config_from_json(to_json(cfg));
    EXPECT_EQ(back.variant, cfg.variant);
    EXPECT_EQ(back.arch, cfg.arch);
  }
  EXPECT_THROW(preset_architecture("huge"), std::invalid_argument);
}

TEST(Model, TearInputWidthIsPointGridAndCode) {
  const ModelConfig cfg{Variant::kTearingNet, preset_architecture("full")};
  for (const auto& [name, shape] : parameter_layout(cfg)) {
    if (name == "tear.stage1.0.weight") {
      EXPECT_EQ(shape[0], 517u);
    }
    if (name == "tear.stage2.2.weight") {
      EXPECT_EQ(shape[1], 2u);
    }
    if (name == "fold.stage1.0.weight") {
      EXPECT_EQ(shape[0], 514u);
    }
    if (name == "fold.stage2.0.weight") {
      EXPECT_EQ(shape[0], 515u);
    }
    if (name == "encoder.head.1.weight") {
      EXPECT_EQ(shape, (Shape{512, 512}));
    }
  }
}

TEST(Model, TearOutputLayerStartsAtZero) {
  Rng rng(1);
  const auto cfg = tiny(Variant::kTearingNet);
  const auto p = init_parameters<double>(cfg, rng);
  for (const auto& v : p.get("tear.stage2.2.weight").values()) EXPECT_EQ(v, 0.0);
  bool nonzero = false;
  for (const auto& v : p.get("tear.stage2.1.weight").values()) nonzero = nonzero || v != 0.0;
  EXPECT_TRUE(nonzero);
}

TEST(Model, CheckParametersNamesTheDifference) {
  Rng rng(2);
  auto p = init_parameters<double>(tiny(Variant::kFoldingNet), rng);
  try {
    check_parameters(tiny(Variant::kTearingNet), p);
    FAIL();
  } catch (const ArchitectureMismatch& e) {
    EXPECT_NE(std::string(e.what()).find("missing tear.stage1.0.weight"), std::string::npos);
  }
  ModelConfig wider = tiny(Variant::kFoldingNet);
  wider.arch.code_dim = 9;
  Rng r2(3);
  ParameterStore<double> out;
  try {
    transfer_parameters(wider, p, r2, out);
    FAIL();
  } catch (const ArchitectureMismatch& e) {
    EXPECT_NE(std::string(e.what()).find("encoder.head.1.weight: expected [6x9], found [6x6]"), std::string::npos)
        << e.what();
  }
}

TEST(Model, TransferKeepsSharedTensorsAndInitialisesTear) {
  Rng rng(4);
  const auto fold = init_parameters<double>(tiny(Variant::kFoldingNet), rng);
  ParameterStore<double> out;
  const auto fresh = transfer_parameters(tiny(Variant::kTearingNet), fold, rng, out);
  for (const auto& name : fold.names()) EXPECT_EQ(out.get(name), fold.get(name));
  EXPECT_EQ(fresh.size(), 12u);
  for (const auto& name : fresh) EXPECT_EQ(name.rfind("tear.", 0), 0u);
  check_parameters(tiny(Variant::kTearingNet), out);
}

TEST(Encoder, PermutationInvariant) {
  Rng rng(5);
  const auto cfg = tiny(Variant::kFoldingNet);
  const auto params = random_params(cfg, rng);
  auto x = random_cloud(30, rng);
  const auto base = codeword_of(params, cfg, x);
  for (int k = 0; k < 100; ++k) {
    rng.shuffle(x.points);
    ASSERT_EQ(codeword_of(params, cfg, x), base);
  }
}

TEST(Encoder, DuplicatedPointsGiveTheSameCode) {
  Rng rng(6);
  const auto cfg = tiny(Variant::kFoldingNet);
  const auto params = random_params(cfg, rng);
  auto x = random_cloud(12, rng);
  const auto base = codeword_of(params, cfg, x);
  auto doubled = x;
  doubled.points.insert(doubled.points.end(), x.points.begin(), x.points.end());
  EXPECT_EQ(codeword_of(params, cfg, doubled), base);
}

TEST(Encoder, SinglePointAndEmptyCloud) {
  Rng rng(7);
  const auto cfg = tiny(Variant::kFoldingNet);
  const auto params = random_params(cfg, rng);
  EXPECT_TRUE(codeword_of(params, cfg, random_cloud(1, rng)).all_finite());
  EXPECT_THROW(codeword_of(params, cfg, PointCloud3{}), std::invalid_argument);
}

TEST(Fold, ZeroWeightsGiveTheFinalBias) {
  const auto cfg = tiny(Variant::kFoldingNet);
  ParameterStore<double> params;
  for (const auto& [name, shape] : parameter_layout(cfg)) params.add(name, Tensor<double>(shape));
  params.get("fold.stage2.2.bias") = Tensor<double>(Shape{3}, {0.25, -1.5, 3.0});
  Tape<double> tape;
  BoundParameters<double> p(tape, params);
  Var code = tape.constant(Tensor<double>(Shape{1, 6}, {1, 2, 3, 4, 5, 6}));
  const auto d = decode(tape, p, code, cfg);
  const auto& x = tape.value(*d.x1);
  ASSERT_EQ(x.rows(), 16u);
  for (std::size_t i = 0; i < 16; ++i) {
    EXPECT_EQ(x.at(i, 0), 0.25);
    EXPECT_EQ(x.at(i, 1), -1.5);
    EXPECT_EQ(x.at(i, 2), 3.0);
  }
}

TEST(Fold, IdenticalInputsGiveIdenticalOutputs) {
  Rng rng(8);
  const auto cfg = tiny(Variant::kFoldingNet);
  const auto params = random_params(cfg, rng);
  Tensor<double> code(Shape{1, 6});
  for (auto& v : code.values()) v = rng.normal();
  PointSet2 u;
  u.points = {{0.3, -0.2}, {0.7, 0.1}, {0.3, -0.2}};
  const auto x = decode_points(params, cfg, code, u);
  ASSERT_EQ(x.size(), 3u);
  EXPECT_EQ(x.points[0], x.points[2]);
}

TEST(Fold, GridEvaluationMatchesPointByPoint) {
  Rng rng(9);
  for (auto v : kAll) {
    const auto cfg = tiny(v);
    const auto params = random_params(cfg, rng);
    Tensor<double> code(Shape{1, 6});
    for (auto& c : code.values()) c = rng.normal();
    const auto grid = make_grid(cfg.arch.grid_dim);
    const auto all = decode_points(params, cfg, code, grid);
    ASSERT_EQ(all.size(), 16u);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      PointSet2 one;
      one.points = {grid.points[i]};
      const auto single = decode_points(params, cfg, code, one);
      for (int k = 0; k < 3; ++k) EXPECT_NEAR(single.points[0][k], all.points[i][k], 1e-13) << variant_name(v);
    }
  }
}

TEST(Tear, ZeroOutputLayerIsTheIdentity) {
  Rng rng(10);
  const auto cfg = tiny(Variant::kTearingNet);
  auto params = init_parameters<double>(cfg, rng);
  Tape<double> tape;
  BoundParameters<double> p(tape, params);
  Var u = tape.constant(grid_tensor<double>(cfg.arch));
  Tensor<double> xt(Shape{16, 3});
  for (auto& v : xt.values()) v = rng.normal();
  Tensor<double> ct(Shape{1, 6});
  for (auto& v : ct.values()) v = rng.normal();
  Var u1 = tear(tape, p, u, tape.constant(xt), tape.constant(ct), cfg.arch);
  EXPECT_EQ(tape.value(u1), tape.value(u));
  EXPECT_THROW(tear(tape, p, u, tape.constant(Tensor<double>(Shape{15, 3})), tape.constant(ct), cfg.arch),
               ShapeError);
}

TEST(Tear, JacobianDiagonalIsOneAtZeroWeights) {
  const auto cfg = tiny(Variant::kTearingNet);
  ParameterStore<double> zeros;
  for (const auto& [name, shape] : parameter_layout(cfg)) zeros.add(name, Tensor<double>(shape));
  Tensor<double> code(Shape{1, 6});
  Tensor<double> x(Shape{1, 3});
  const double h = 1e-6;
  for (int axis = 0; axis < 2; ++axis) {
    auto eval = [&](double shift) {
      Tape<double> tape;
      BoundParameters<double> p(tape, zeros);
      Tensor<double> u(Shape{1, 2}, {0.2, -0.4});
      u[axis] += shift;
      return tape.value(tear(tape, p, tape.constant(u), tape.constant(x), tape.constant(code), cfg.arch));
    };
    const auto up = eval(h), down = eval(-h);
    for (int k = 0; k < 2; ++k) {
      const double d = (up[k] - down[k]) / (2 * h);
      EXPECT_NEAR(d, k == axis ? 1.0 : 0.0, 1e-8);
    }
  }
}

TEST(Decode, ZeroTearMakesTheSecondFoldRepeatTheFirst) {
  Rng rng(11);
  for (auto v : {Variant::kTearingNet, Variant::kTearingNetNoGF, Variant::kTearingNet3}) {
    const auto cfg = tiny(v);
    auto params = random_params(cfg, rng);
    for (const auto* name : {"tear.stage2.2.weight", "tear.stage2.2.bias"}) {
      params.get(name).fill(0.0);
    }
    Tape<double> tape;
    BoundParameters<double> p(tape, params);
    const auto f = forward(tape, p, tape.constant(cloud_tensor<double>(random_cloud(20, rng))), cfg);
    EXPECT_EQ(tape.value(*f.decoded.x2), tape.value(*f.decoded.x1));
    EXPECT_EQ(tape.value(*f.decoded.u1), tape.value(f.decoded.u0));
    if (f.decoded.x_fold3) {
      EXPECT_EQ(tape.value(*f.decoded.x_fold3), tape.value(*f.decoded.x1));
    }
  }
}

TEST(Decode, ZeroLambdaLeavesTheFoldUnfiltered) {
  Rng rng(12);
  auto cfg = tiny(Variant::kTearingNet);
  cfg.arch.lambda = 0.0;
  const auto params = random_params(cfg, rng);
  Tape<double> tape;
  BoundParameters<double> p(tape, params);
  const auto f = forward(tape, p, tape.constant(cloud_tensor<double>(random_cloud(20, rng))), cfg);
  EXPECT_EQ(tape.value(*f.decoded.x3), tape.value(*f.decoded.x2));
}

TEST(Decode, EveryStageHasGridSize) {
  Rng rng(13);
  for (auto v : kAll) {
    const auto cfg = tiny(v);
    const auto params = random_params(cfg, rng);
    Tape<double> tape;
    BoundParameters<double> p(tape, params);
    const auto f = forward(tape, p, tape.constant(cloud_tensor<double>(random_cloud(20, rng))), cfg);
    const auto& d = f.decoded;
    for (const auto& var : {d.x1, d.u1, d.x2, d.u2, d.x_fold3, d.x3}) {
      if (var) {
        EXPECT_EQ(tape.value(*var).rows(), 16u) << variant_name(v);
      }
    }
    EXPECT_EQ(tape.value(d.output).rows(), 16u);
    EXPECT_EQ(d.torn.has_value(), has_tear(v));
  }
}

TEST(Decode, ResidualIdentityAgainstFoldingNet) {
  Rng rng(14);
  const auto fold_cfg = tiny(Variant::kFoldingNet);
  const auto fold_params = init_parameters<float>(fold_cfg, rng);
  ParameterStore<float> tear_params;
  transfer_parameters(tiny(Variant::kTearingNetNoGF), fold_params, rng, tear_params);
  const auto input = cloud_tensor<float>(random_cloud(25, rng));

  Tape<float> a;
  BoundParameters<float> pa(a, fold_params);
  const auto fa = forward(a, pa, a.constant(input), fold_cfg);
  Tape<float> b;
  BoundParameters<float> pb(b, tear_params);
  const auto fb = forward(b, pb, b.constant(input), tiny(Variant::kTearingNetNoGF));
  EXPECT_EQ(a.value(fa.decoded.output), b.value(fb.decoded.output));
}

TEST(Decode, GradientsReachEveryParameter) {
  for (auto v : kAll) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      Rng rng(100 + seed);
      const auto cfg = tiny(v);
      const auto params = random_params(cfg, rng);
      const auto input = cloud_tensor<double>(random_cloud(10, rng));
      const LossBuilder loss = [&](Tape<double>& t, const BoundParameters<double>& p) {
        Var x = t.constant(input);
        return chamfer_aug_op(t, x, forward(t, p, x, cfg).decoded.output);
      };
      const auto r = gradient_check(params, loss);
      EXPECT_LE(r.max_relative_error, 1e-4) << variant_name(v) << " seed " << seed << " " << r.worst_parameter;
    }
  }
}
