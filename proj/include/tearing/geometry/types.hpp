#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace tearing {

using Point2 = std::array<double, 2>;
using Point3 = std::array<double, 3>;

/// Points on the primitive square. `grid_dim` is set for a regular N x N
/// grid stored row-major (row index first).
struct PointSet2 {
  std::vector<Point2> points;
  std::optional<std::size_t> grid_dim;

  std::size_t size() const { return points.size(); }
};

struct PointCloud3 {
  std::vector<Point3> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  friend bool operator==(const PointCloud3&, const PointCloud3&) = default;
};

struct Edge {
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  double w = 0.0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Undirected weighted graph; each edge stored once with i < j, sorted.
struct SparseGraph {
  std::size_t vertex_count = 0;
  std::vector<Edge> edges;

  /// Throws std::invalid_argument on out-of-range, unordered, duplicate or
  /// out-of-(0,1] edges.
  void validate() const;
  std::vector<std::size_t> degrees() const;
  friend bool operator==(const SparseGraph&, const SparseGraph&) = default;
};

enum class TearMode {
  kDistance2D,  // keep an edge when the 2D distance is within the radius
  kWeight5D,    // keep an edge when its kernel weight reaches the threshold
};

enum class GridConvention {
  kInclusive,     // endpoints on the square boundary, spacing 2/(N-1)
  kCellCentered,  // cell centres, spacing 2/N
};

struct GraphConfig {
  double epsilon = 0.02;
  double keep_threshold = 1e-12;
  TearMode mode = TearMode::kWeight5D;
  double radius = 0.0;  // used in kDistance2D mode

  void validate() const;
  friend bool operator==(const GraphConfig&, const GraphConfig&) = default;
};

/// One quad per surviving elementary grid square, vertices in grid order.
struct QuadMesh {
  std::vector<Point3> vertices;
  std::vector<std::array<std::uint32_t, 4>> faces;
};

class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace tearing
