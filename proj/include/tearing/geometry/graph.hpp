#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <functional>
#include <span>

#include "tearing/geometry/types.hpp"
#include "tearing/numeric/rng.hpp"

namespace tearing {

// --- primitive grid -------------------------------------------------------

double grid_spacing(std::size_t n, GridConvention convention = GridConvention::kInclusive);

/// N x N samples of [-1, 1]^2, row-major: point (r, c) has u from column c and
/// v from row r.
PointSet2 make_grid(std::size_t n, GridConvention convention = GridConvention::kInclusive);

/// Distance-mode configuration whose radius (1.05 x spacing) admits exactly
/// the four axis neighbours.
GraphConfig distance_config(std::size_t n, double epsilon = 0.02,
                            GridConvention convention = GridConvention::kInclusive);

// --- graphs ---------------------------------------------------------------

/// Truncated Gaussian kernel between two equal-dimension points.
double kernel_weight(std::span<const double> a, std::span<const double> b, const GraphConfig& cfg);

/// 4-neighbour graph of a regular grid; every weight uses the kernel on the
/// grid positions without truncation.
SparseGraph grid_graph(const PointSet2& grid, const GraphConfig& cfg);

/// Per-vertex coordinates of any dimension, row-major.
struct Positions {
  std::size_t dim = 0;
  std::vector<double> values;

  std::size_t count() const { return dim == 0 ? 0 : values.size() / dim; }
  std::span<const double> row(std::size_t i) const { return {values.data() + i * dim, dim}; }

  static Positions from(const PointSet2& u);
  /// p_i = [u_i, x_i].
  static Positions concat(const PointSet2& u, const PointCloud3& x);
};

/// Re-weight the edges of `initial` on new positions, dropping edges whose
/// kernel weight is truncated to zero. Never adds edges.
SparseGraph tear_graph(const SparseGraph& initial, const Positions& positions, const GraphConfig& cfg);

/// Dense unnormalized Laplacian D - W.
Eigen::MatrixXd laplacian(const SparseGraph& g);

/// (I - lambda L) X with X as an m x 3 matrix.
PointCloud3 graph_filter(const PointCloud3& x, const SparseGraph& g, double lambda);

std::size_t connected_components(const SparseGraph& g);

/// Drop points whose vertex has no edge. `kept` receives surviving indices.
PointCloud3 remove_isolated(const PointCloud3& x, const SparseGraph& torn,
                            std::vector<std::size_t>* kept = nullptr);

// --- mesh and resampling --------------------------------------------------

/// Quad faces of the N x N grid whose four boundary edges all survive.
QuadMesh extract_mesh(std::size_t n, const SparseGraph& torn, const PointCloud3& x);

/// Per-square flag (row-major over (N-1)^2 squares): true if the face survives.
std::vector<bool> surviving_faces(std::size_t n, const SparseGraph& torn);

/// Index of the elementary square containing a point of [-1, 1]^2.
std::size_t square_of(const Point2& u, std::size_t n, GridConvention convention = GridConvention::kInclusive);

/// Maps 2D primitive points through a decoder.
using PointwiseDecoder = std::function<PointCloud3(const PointSet2&)>;

struct ResampleResult {
  PointCloud3 points;
  std::size_t drawn = 0;
  std::size_t accepted = 0;
};

class ResampleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Draw uniform points in [-1, 1]^2, keep those whose square survives, decode
/// them. Stops after `count` survivors; throws ResampleError once
/// `retry_factor * count` draws are exhausted.
ResampleResult resample(const PointwiseDecoder& decoder, std::size_t count, std::size_t n,
                        const std::vector<bool>& faces, Rng& rng, std::size_t retry_factor = 100,
                        GridConvention convention = GridConvention::kInclusive);

// --- exports --------------------------------------------------------------

void write_obj(const QuadMesh& mesh, const std::filesystem::path& path);
void write_graph_csv(const SparseGraph& g, const std::filesystem::path& path);
void write_points2_csv(const PointSet2& u, const std::filesystem::path& path);

}  // namespace tearing
