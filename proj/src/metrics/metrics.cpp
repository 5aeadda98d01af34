#include "tearing/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace tearing {

namespace {
constexpr std::size_t kBucket = 8;
}

NNIndex::NNIndex(std::vector<Point3> points, Kind kind) : points_(std::move(points)), kind_(kind) {
  if (points_.empty()) throw MetricError("nearest-neighbour index over an empty point set");
  if (kind_ == Kind::kBruteForce) return;
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  nodes_.push_back({});  // slot 0 is the "no child" sentinel
  build(0, order_.size(), 0);
}

std::size_t NNIndex::build(std::size_t begin, std::size_t end, int depth) {
  const std::size_t id = nodes_.size();
  nodes_.push_back({});
  if (end - begin <= kBucket) {
    nodes_[id].axis = -1;
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    return id;
  }
  const int axis = depth % 3;
  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::size_t a, std::size_t b) {
                     if (points_[a][axis] != points_[b][axis]) return points_[a][axis] < points_[b][axis];
                     return a < b;
                   });
  nodes_[id].axis = axis;
  nodes_[id].point = order_[mid];
  const std::size_t left = begin < mid ? build(begin, mid, depth + 1) : 0;
  const std::size_t right = mid + 1 < end ? build(mid + 1, end, depth + 1) : 0;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void NNIndex::search(std::size_t id, const Point3& q, std::size_t& best, double& best_d2) const {
  const Node& node = nodes_[id];
  auto consider = [&](std::size_t p) {
    const double d2 = distance2(q, points_[p]);
    if (d2 < best_d2 || (d2 == best_d2 && p < best)) {
      best_d2 = d2;
      best = p;
    }
  };
  if (node.axis < 0) {
    for (std::size_t k = node.begin; k < node.end; ++k) consider(order_[k]);
    return;
  }
  consider(node.point);
  const double diff = q[node.axis] - points_[node.point][node.axis];
  const std::size_t near = diff < 0 ? node.left : node.right;
  const std::size_t far = diff < 0 ? node.right : node.left;
  if (near) search(near, q, best, best_d2);
  // Points on the far side are at least |diff| away along this axis; equal
  // distances must still be visited for the lowest-index tie rule.
  if (far && diff * diff <= best_d2) search(far, q, best, best_d2);
}

Neighbor NNIndex::query(const Point3& q) const {
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  if (kind_ == Kind::kBruteForce) {
    for (std::size_t p = 0; p < points_.size(); ++p) {
      const double d2 = distance2(q, points_[p]);
      if (d2 < best_d2) {
        best_d2 = d2;
        best = p;
      }
    }
  } else {
    search(1, q, best, best_d2);
  }
  return {best, std::sqrt(best_d2)};
}

double directed_chamfer(const PointCloud3& from, const PointCloud3& to) {
  if (from.empty() || to.empty()) throw MetricError("Chamfer distance of an empty cloud");
  const NNIndex index(to.points);
  double sum = 0.0;
  for (const auto& p : from.points) sum += index.query(p).distance;
  return sum / static_cast<double>(from.size());
}

double chamfer_aug(const PointCloud3& x, const PointCloud3& x_hat) {
  return std::max(directed_chamfer(x, x_hat), directed_chamfer(x_hat, x));
}

double emd(const PointCloud3& x, const PointCloud3& x_hat, std::size_t cap) {
  const std::size_t n = x.size();
  if (n != x_hat.size()) {
    throw MetricError("EMD needs equal sizes, got " + std::to_string(n) + " and " + std::to_string(x_hat.size()));
  }
  if (n == 0) throw MetricError("EMD of empty clouds");
  if (n > cap) {
    throw MetricError("EMD over " + std::to_string(n) + " points exceeds the cap of " + std::to_string(cap) +
                      "; subsample both clouds first");
  }
  // Shortest augmenting path with potentials, 1-based with a virtual column 0.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) cost[i * n + j] = std::sqrt(distance2(x.points[i], x_hat.points[j]));
  }
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  std::vector<bool> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), false);
    do {
      used[j0] = true;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  // Sum the chosen pairs directly rather than trusting the potentials.
  double total = 0.0;
  for (std::size_t j = 1; j <= n; ++j) total += cost[(match[j] - 1) * n + (j - 1)];
  return total / static_cast<double>(n);
}

PointCloud3 subsample(const PointCloud3& x, std::size_t count, Rng& rng) {
  if (x.size() <= count) return x;
  auto order = rng.permutation(x.size());
  order.resize(count);
  std::sort(order.begin(), order.end());
  PointCloud3 out;
  out.points.reserve(count);
  for (auto k : order) out.points.push_back(x.points[k]);
  return out;
}

double emd_subsampled(const PointCloud3& x, const PointCloud3& x_hat, std::size_t budget, std::uint64_t seed) {
  const std::size_t n = std::min({x.size(), x_hat.size(), budget});
  Rng ra(Rng::derive(seed, "emd.input"));
  Rng rb(Rng::derive(seed, "emd.recon"));
  return emd(subsample(x, n, ra), subsample(x_hat, n, rb), std::max<std::size_t>(n, 1));
}

}  // namespace tearing
