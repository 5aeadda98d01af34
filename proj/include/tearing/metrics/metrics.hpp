#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "tearing/geometry/types.hpp"
#include "tearing/numeric/rng.hpp"

namespace tearing {

class MetricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;
};

/// Exact nearest-neighbour search over a fixed 3D point set. Ties go to the
/// lowest index, so results agree with a linear scan bit for bit.
class NNIndex {
 public:
  enum class Kind { kKdTree, kBruteForce };

  explicit NNIndex(std::vector<Point3> points, Kind kind = Kind::kKdTree);

  Neighbor query(const Point3& q) const;
  std::size_t size() const { return points_.size(); }

 private:
  struct Node {
    std::size_t point;    // index into points_
    int axis;             // -1 for a leaf bucket
    std::size_t left = 0;  // child node indices, 0 = none
    std::size_t right = 0;
    std::size_t begin = 0;  // bucket range into order_
    std::size_t end = 0;
  };

  std::size_t build(std::size_t begin, std::size_t end, int depth);
  void search(std::size_t node, const Point3& q, std::size_t& best, double& best_d2) const;

  std::vector<Point3> points_;
  Kind kind_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

/// Squared Euclidean distance, summed in x, y, z order.
inline double distance2(const Point3& a, const Point3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

/// Mean over `from` of the distance to the nearest point of `to`.
double directed_chamfer(const PointCloud3& from, const PointCloud3& to);

/// max(directed(x, x_hat), directed(x_hat, x)).
double chamfer_aug(const PointCloud3& x, const PointCloud3& x_hat);

/// Exact equal-size assignment cost divided by n (Hungarian algorithm).
double emd(const PointCloud3& x, const PointCloud3& x_hat, std::size_t cap = 512);

/// `count` distinct points drawn without replacement, kept in input order.
/// Returns the cloud unchanged when it is not larger than `count`.
PointCloud3 subsample(const PointCloud3& x, std::size_t count, Rng& rng);

/// Equal-size EMD for clouds of any size: both sides are subsampled to
/// min(|x|, |x_hat|, budget) points with generators derived from `seed`.
double emd_subsampled(const PointCloud3& x, const PointCloud3& x_hat, std::size_t budget, std::uint64_t seed);

}  // namespace tearing
