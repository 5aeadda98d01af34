#include "tearing/nets/network.hpp"

#include "tearing/geometry/filter_op.hpp"
#include "tearing/metrics/chamfer_op.hpp"
#include "tearing/numeric/ops.hpp"

namespace tearing {

namespace {

std::string layer(const std::string& prefix, std::size_t k, const char* what) {
  return prefix + "." + std::to_string(k) + "." + what;
}

// Dense layers prefix.0 .. prefix.(count-1), ReLU after every layer but the
// last unless `relu_last`.
template <typename T>
Var mlp(Tape<T>& tape, const BoundParameters<T>& p, const std::string& prefix, Var x, std::size_t first,
        std::size_t count, bool relu_last) {
  for (std::size_t k = first; k < count; ++k) {
    x = ops::linear(tape, x, p[layer(prefix, k, "weight")], p[layer(prefix, k, "bias")]);
    if (k + 1 < count || relu_last) x = ops::relu(tape, x);
  }
  return x;
}

// First layer takes the codeword as a broadcast extra input.
template <typename T>
Var code_mlp(Tape<T>& tape, const BoundParameters<T>& p, const std::string& prefix, Var x, Var code,
             std::size_t count, bool relu_last) {
  Var h = ops::code_linear(tape, x, code, p[layer(prefix, 0, "weight")], p[layer(prefix, 0, "bias")]);
  if (count > 1 || relu_last) h = ops::relu(tape, h);
  return mlp(tape, p, prefix, h, 1, count, relu_last);
}

template <typename T>
Var filtered(Tape<T>& tape, Decoded& d, Var u, Var x, const ModelConfig& cfg, bool apply) {
  const Architecture& a = cfg.arch;
  const auto candidates = grid_graph(make_grid(a.grid_dim, a.convention), a.graph);
  Var positions = a.graph.mode == TearMode::kWeight5D ? ops::concat_cols(tape, u, x) : u;
  d.grid_last = u;
  if (!apply) {
    d.torn = torn_graph_of(tape.value(positions), candidates, a.graph);
    return x;
  }
  SparseGraph torn;
  Var out = graph_filter_op(tape, x, positions, candidates, a.graph, a.lambda, &torn);
  d.torn = std::move(torn);
  return out;
}

}  // namespace

template <typename T>
Tensor<T> grid_tensor(const Architecture& arch) {
  const auto g = make_grid(arch.grid_dim, arch.convention);
  Tensor<T> t(Shape{g.size(), 2});
  for (std::size_t i = 0; i < g.size(); ++i) {
    t.at(i, 0) = static_cast<T>(g.points[i][0]);
    t.at(i, 1) = static_cast<T>(g.points[i][1]);
  }
  return t;
}

template <typename T>
Tensor<T> cloud_tensor(const PointCloud3& x) {
  Tensor<T> t(Shape{x.size(), 3});
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (int k = 0; k < 3; ++k) t.at(i, k) = static_cast<T>(x.points[i][k]);
  }
  return t;
}

template <typename T>
PointCloud3 tensor_cloud(const Tensor<T>& t) {
  if (t.rank() != 2 || t.cols() != 3) throw ShapeError("expected (n, 3) points, got " + shape_str(t.shape()));
  PointCloud3 x;
  x.points.reserve(t.rows());
  for (std::size_t i = 0; i < t.rows(); ++i) {
    x.points.push_back({static_cast<double>(t.at(i, 0)), static_cast<double>(t.at(i, 1)), static_cast<double>(t.at(i, 2))});
  }
  return x;
}

template <typename T>
PointSet2 tensor_points2(const Tensor<T>& t, std::optional<std::size_t> grid_dim) {
  if (t.rank() != 2 || t.cols() != 2) throw ShapeError("expected (m, 2) points, got " + shape_str(t.shape()));
  PointSet2 u;
  u.grid_dim = grid_dim;
  for (std::size_t i = 0; i < t.rows(); ++i) {
    u.points.push_back({static_cast<double>(t.at(i, 0)), static_cast<double>(t.at(i, 1))});
  }
  return u;
}

template <typename T>
Var encode(Tape<T>& tape, const BoundParameters<T>& p, Var points, const Architecture& arch) {
  const Tensor<T>& x = tape.value(points);
  if (x.rank() != 2 || x.cols() != 3) throw ShapeError("encoder input must be (n, 3), got " + shape_str(x.shape()));
  if (x.rows() == 0) throw std::invalid_argument("cannot encode an empty point cloud");
  Var h = mlp(tape, p, "encoder.point", points, 0, arch.point_widths.size(), true);
  Var pooled = ops::max_rows(tape, h);
  return mlp(tape, p, "encoder.head", pooled, 0, arch.head_widths.size() + 1, false);
}

template <typename T>
Var fold(Tape<T>& tape, const BoundParameters<T>& p, const std::string& prefix, Var u, Var code,
         const Architecture& arch) {
  const std::size_t count = arch.fold_hidden.size() + 1;
  Var y = code_mlp(tape, p, prefix + ".stage1", u, code, count, false);
  return code_mlp(tape, p, prefix + ".stage2", y, code, count, false);
}

template <typename T>
Var tear(Tape<T>& tape, const BoundParameters<T>& p, Var u, Var x, Var code, const Architecture& arch) {
  if (tape.value(u).rows() != tape.value(x).rows()) {
    throw ShapeError("tear: grid " + shape_str(tape.value(u).shape()) + " and points " +
                     shape_str(tape.value(x).shape()) + " differ in size");
  }
  const std::size_t count = arch.tear_hidden.size() + 1;
  Var ux = ops::concat_cols(tape, u, x);
  Var mid = code_mlp(tape, p, "tear.stage1", ux, code, count, true);
  Var delta = code_mlp(tape, p, "tear.stage2", ops::concat_cols(tape, ux, mid), code, count, false);
  return ops::add(tape, u, delta);
}

template <typename T>
Decoded decode(Tape<T>& tape, const BoundParameters<T>& p, Var code, const ModelConfig& cfg) {
  const Architecture& a = cfg.arch;
  Decoded d;
  d.u0 = tape.constant(grid_tensor<T>(a));
  d.grid_last = d.u0;
  switch (cfg.variant) {
    case Variant::kFoldingNet:
      d.x1 = fold(tape, p, "fold", d.u0, code, a);
      d.output = *d.x1;
      break;
    case Variant::kCascadedF:
      d.x1 = fold(tape, p, "fold", d.u0, code, a);
      d.x2 = fold(tape, p, "fold2", *d.x1, code, a);
      d.output = *d.x2;
      break;
    case Variant::kTearingNetTF: {
      Var zeros = tape.constant(Tensor<T>(Shape{tape.value(d.u0).rows(), 3}));
      d.u1 = tear(tape, p, d.u0, zeros, code, a);
      d.x2 = fold(tape, p, "fold", *d.u1, code, a);
      d.x3 = filtered(tape, d, *d.u1, *d.x2, cfg, true);
      d.output = *d.x3;
      break;
    }
    case Variant::kTearingNet:
    case Variant::kTearingNetNoGF: {
      d.x1 = fold(tape, p, "fold", d.u0, code, a);
      d.u1 = tear(tape, p, d.u0, *d.x1, code, a);
      d.x2 = fold(tape, p, "fold", *d.u1, code, a);
      const bool apply = cfg.variant == Variant::kTearingNet;
      Var out = filtered(tape, d, *d.u1, *d.x2, cfg, apply);
      if (apply) d.x3 = out;
      d.output = out;
      break;
    }
    case Variant::kTearingNet3: {
      d.x1 = fold(tape, p, "fold", d.u0, code, a);
      d.u1 = tear(tape, p, d.u0, *d.x1, code, a);
      d.x2 = fold(tape, p, "fold", *d.u1, code, a);
      d.u2 = tear(tape, p, *d.u1, *d.x2, code, a);
      d.x_fold3 = fold(tape, p, "fold", *d.u2, code, a);
      d.x3 = filtered(tape, d, *d.u2, *d.x_fold3, cfg, true);
      d.output = *d.x3;
      break;
    }
  }
  return d;
}

template <typename T>
Forward forward(Tape<T>& tape, const BoundParameters<T>& p, Var points, const ModelConfig& cfg) {
  Forward f;
  f.codeword = encode(tape, p, points, cfg.arch);
  f.decoded = decode(tape, p, f.codeword, cfg);
  return f;
}

template <typename T>
PointCloud3 decode_points(const ParameterStore<T>& params, const ModelConfig& cfg, const Tensor<T>& code,
                          const PointSet2& u) {
  if (u.points.empty()) return {};
  Tape<T> tape;
  BoundParameters<T> p(tape, params);
  const Architecture& a = cfg.arch;
  Tensor<T> ut(Shape{u.size(), 2});
  for (std::size_t i = 0; i < u.size(); ++i) {
    ut.at(i, 0) = static_cast<T>(u.points[i][0]);
    ut.at(i, 1) = static_cast<T>(u.points[i][1]);
  }
  Var c = tape.constant(code);
  Var u0 = tape.constant(std::move(ut));
  Var out;
  switch (cfg.variant) {
    case Variant::kFoldingNet:
      out = fold(tape, p, "fold", u0, c, a);
      break;
    case Variant::kCascadedF:
      out = fold(tape, p, "fold2", fold(tape, p, "fold", u0, c, a), c, a);
      break;
    case Variant::kTearingNetTF: {
      Var zeros = tape.constant(Tensor<T>(Shape{u.size(), 3}));
      out = fold(tape, p, "fold", tear(tape, p, u0, zeros, c, a), c, a);
      break;
    }
    case Variant::kTearingNet:
    case Variant::kTearingNetNoGF: {
      Var u1 = tear(tape, p, u0, fold(tape, p, "fold", u0, c, a), c, a);
      out = fold(tape, p, "fold", u1, c, a);
      break;
    }
    case Variant::kTearingNet3: {
      Var u1 = tear(tape, p, u0, fold(tape, p, "fold", u0, c, a), c, a);
      Var u2 = tear(tape, p, u1, fold(tape, p, "fold", u1, c, a), c, a);
      out = fold(tape, p, "fold", u2, c, a);
      break;
    }
  }
  return tensor_cloud(tape.value(out));
}

#define TEARING_NETWORK(T)                                                                                     \
  template Tensor<T> grid_tensor<T>(const Architecture&);                                                      \
  template Tensor<T> cloud_tensor<T>(const PointCloud3&);                                                      \
  template PointCloud3 tensor_cloud<T>(const Tensor<T>&);                                                      \
  template PointSet2 tensor_points2<T>(const Tensor<T>&, std::optional<std::size_t>);                          \
  template Var encode<T>(Tape<T>&, const BoundParameters<T>&, Var, const Architecture&);                      \
  template Var fold<T>(Tape<T>&, const BoundParameters<T>&, const std::string&, Var, Var, const Architecture&); \
  template Var tear<T>(Tape<T>&, const BoundParameters<T>&, Var, Var, Var, const Architecture&);               \
  template Decoded decode<T>(Tape<T>&, const BoundParameters<T>&, Var, const ModelConfig&);                    \
  template Forward forward<T>(Tape<T>&, const BoundParameters<T>&, Var, const ModelConfig&);                   \
  template PointCloud3 decode_points<T>(const ParameterStore<T>&, const ModelConfig&, const Tensor<T>&, const PointSet2&);

TEARING_NETWORK(float)
TEARING_NETWORK(double)

template <typename T>
Reconstruction reconstruct(const ParameterStore<T>& params, const ModelConfig& cfg, const PointCloud3& input) {
  Tape<T> tape;
  BoundParameters<T> p(tape, params);
  const auto f = forward(tape, p, tape.constant(cloud_tensor<T>(input)), cfg);
  const auto& d = f.decoded;
  const std::size_t n = cfg.arch.grid_dim;
  Reconstruction r;
  for (const T v : tape.value(f.codeword).values()) r.codeword.push_back(static_cast<double>(v));
  r.u0 = tensor_points2(tape.value(d.u0), n);
  if (d.u1) r.u1 = tensor_points2(tape.value(*d.u1), n);
  if (d.x1) r.x1 = tensor_cloud(tape.value(*d.x1));
  if (d.x2) r.x2 = tensor_cloud(tape.value(*d.x2));
  if (d.x3) r.x3 = tensor_cloud(tape.value(*d.x3));
  r.output = tensor_cloud(tape.value(d.output));
  r.torn = d.torn;
  r.grid_last = tensor_points2(tape.value(d.grid_last), n);
  return r;
}

template Reconstruction reconstruct<float>(const ParameterStore<float>&, const ModelConfig&, const PointCloud3&);
template Reconstruction reconstruct<double>(const ParameterStore<double>&, const ModelConfig&, const PointCloud3&);

GradCheckResult network_gradcheck(const ModelConfig& cfg, std::uint64_t seed, std::size_t points,
                                  const GradCheckOptions& options) {
  Rng rng = Rng::derive(seed, "gradcheck");
  ParameterStore<double> params;
  for (const auto& [name, shape] : parameter_layout(cfg)) {
    Tensor<double> t(shape);
    for (auto& v : t.values()) v = rng.uniform(-0.6, 0.6);
    params.add(name, std::move(t));
  }
  Tensor<double> input(Shape{points, 3});
  for (auto& v : input.values()) v = rng.uniform(-1.0, 1.0);
  const LossBuilder loss = [&](Tape<double>& t, const BoundParameters<double>& p) {
    const Var x = t.constant(input);
    return chamfer_aug_op(t, x, forward(t, p, x, cfg).decoded.output);
  };
  return gradient_check(params, loss, options);
}

}  // namespace tearing

