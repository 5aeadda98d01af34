#pragma once

#include <optional>

#include "tearing/geometry/graph.hpp"
#include "tearing/nets/model.hpp"
#include "tearing/numeric/gradcheck.hpp"

namespace tearing {

/// Tape values of one decoder pass. Which fields are set depends on the
/// variant; `output` is always the variant's final reconstruction.
struct Decoded {
  Var u0;
  std::optional<Var> x1;        // first fold (F1 for CascadedF, absent for TearingNet_TF)
  std::optional<Var> u1;        // torn grid after the first tear
  std::optional<Var> x2;        // second fold
  std::optional<Var> u2;        // TearingNet3: second tear
  std::optional<Var> x_fold3;   // TearingNet3: third fold
  std::optional<Var> x3;        // graph-filtered output
  std::optional<SparseGraph> torn;
  Var grid_last;                // grid the torn graph was measured on
  Var output;
};

struct Forward {
  Var codeword;
  Decoded decoded;
};

/// Grid points as an (N*N x 2) tensor.
template <typename T>
Tensor<T> grid_tensor(const Architecture& arch);

/// Point cloud as an (n x 3) tensor and back.
template <typename T>
Tensor<T> cloud_tensor(const PointCloud3& x);
template <typename T>
PointCloud3 tensor_cloud(const Tensor<T>& t);
template <typename T>
PointSet2 tensor_points2(const Tensor<T>& t, std::optional<std::size_t> grid_dim = std::nullopt);

template <typename T>
Var encode(Tape<T>& tape, const BoundParameters<T>& p, Var points, const Architecture& arch);

/// Two-stage fold of `u` (m x 2, or m x 3 for the second cascaded network).
template <typename T>
Var fold(Tape<T>& tape, const BoundParameters<T>& p, const std::string& prefix, Var u, Var code,
         const Architecture& arch);

/// u + T(u, x; c); `x` may be an all-zero constant.
template <typename T>
Var tear(Tape<T>& tape, const BoundParameters<T>& p, Var u, Var x, Var code, const Architecture& arch);

template <typename T>
Decoded decode(Tape<T>& tape, const BoundParameters<T>& p, Var code, const ModelConfig& cfg);

template <typename T>
Forward forward(Tape<T>& tape, const BoundParameters<T>& p, Var points, const ModelConfig& cfg);

/// Point-wise decoder for arbitrary primitive samples: the fold/tear chain
/// without the graph filter, which needs a grid.
template <typename T>
PointCloud3 decode_points(const ParameterStore<T>& params, const ModelConfig& cfg, const Tensor<T>& code,
                          const PointSet2& u);

/// Plain values of one forward pass, for export and evaluation.
struct Reconstruction {
  std::vector<double> codeword;
  PointSet2 u0;
  std::optional<PointSet2> u1;
  std::optional<PointCloud3> x1;
  std::optional<PointCloud3> x2;
  std::optional<PointCloud3> x3;
  PointCloud3 output;
  std::optional<SparseGraph> torn;
  PointSet2 grid_last;  // primitive positions the torn graph was measured on
};

template <typename T>
Reconstruction reconstruct(const ParameterStore<T>& params, const ModelConfig& cfg, const PointCloud3& input);

/// Finite-difference check of the augmented Chamfer loss of one variant in
/// f64: every tensor (the zero-initialized tearing output layer included)
/// and the input cloud are drawn uniformly from a generator seeded by `seed`.
GradCheckResult network_gradcheck(const ModelConfig& cfg, std::uint64_t seed, std::size_t points = 10,
                                  const GradCheckOptions& options = {});

}  // namespace tearing
