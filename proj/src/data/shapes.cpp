#include "tearing/data/shapes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tearing {

namespace {

constexpr double kPi = std::numbers::pi;

// Tube angle with density proportional to R + r cos(theta), by rejection.
double tube_angle(double R, double r, Rng& rng) {
  for (;;) {
    const double theta = rng.uniform(0.0, 2.0 * kPi);
    if (rng.uniform() * (R + r) <= R + r * std::cos(theta)) return theta;
  }
}

// Torus around the z axis through the origin.
Point3 torus_point(double R, double r, Rng& rng) {
  const double phi = rng.uniform(0.0, 2.0 * kPi);
  const double theta = tube_angle(R, r, rng);
  const double rho = R + r * std::cos(theta);
  return {rho * std::cos(phi), rho * std::sin(phi), r * std::sin(theta)};
}

Point3 sphere_point(Rng& rng) {
  for (;;) {
    const double x = rng.normal(), y = rng.normal(), z = rng.normal();
    const double n = std::sqrt(x * x + y * y + z * z);
    if (n > 1e-12) return {x / n, y / n, z / n};
  }
}

Point3 box_point(Rng& rng) {
  const double a = 0.6, b = 0.45, c = 0.3;
  const double areas[3] = {b * c, a * c, a * b};  // faces normal to x, y, z
  const double pick = rng.uniform() * (areas[0] + areas[1] + areas[2]);
  const int axis = pick < areas[0] ? 0 : pick < areas[0] + areas[1] ? 1 : 2;
  const double half[3] = {a, b, c};
  Point3 p{};
  for (int k = 0; k < 3; ++k) p[k] = rng.uniform(-half[k], half[k]);
  p[axis] = rng.uniform() < 0.5 ? -half[axis] : half[axis];
  return p;
}

Point3 cylinder_point(Rng& rng) {
  const double r = 0.5, h = 0.6;
  const double side = 2.0 * kPi * r * 2.0 * h, cap = kPi * r * r;
  const double pick = rng.uniform() * (side + 2.0 * cap);
  const double phi = rng.uniform(0.0, 2.0 * kPi);
  if (pick < side) return {r * std::cos(phi), r * std::sin(phi), rng.uniform(-h, h)};
  const double rad = r * std::sqrt(rng.uniform());
  return {rad * std::cos(phi), rad * std::sin(phi), pick < side + cap ? -h : h};
}

Point3 cone_point(Rng& rng) {
  const double r = 0.6, h = 1.2;
  const double slant = std::sqrt(r * r + h * h);
  const double side = kPi * r * slant, base = kPi * r * r;
  const double phi = rng.uniform(0.0, 2.0 * kPi);
  if (rng.uniform() * (side + base) < side) {
    const double s = std::sqrt(rng.uniform());  // fraction of the way from the apex
    return {s * r * std::cos(phi), s * r * std::sin(phi), h / 2 - s * h};
  }
  const double rad = r * std::sqrt(rng.uniform());
  return {rad * std::cos(phi), rad * std::sin(phi), -h / 2};
}

}  // namespace

PointCloud3 gen_torus_raw(const TorusSpec& spec) {
  if (spec.genus < 1 || spec.genus > 3) {
    throw DataError("torus genus must be 1, 2 or 3, got " + std::to_string(spec.genus));
  }
  if (!(spec.tube_radius > 0.0 && 3.0 * spec.tube_radius < spec.ring_radius)) {
    throw DataError("tube radius must lie in (0, R/3) for the linked chain");
  }
  const double R = spec.ring_radius, r = spec.tube_radius;
  Rng rng(spec.seed);
  PointCloud3 out;
  out.points.reserve(spec.count);
  const auto g = static_cast<std::size_t>(spec.genus);
  for (std::size_t k = 0; k < g; ++k) {
    const std::size_t share = spec.count / g + (k < spec.count % g ? 1 : 0);
    const double cx = static_cast<double>(k) * 4.0 * R / 3.0;
    for (std::size_t i = 0; i < share; ++i) {
      const Point3 p = torus_point(R, r, rng);
      // Odd links are turned 90 degrees about x: (x, y, z) -> (x, -z, y).
      out.points.push_back(k % 2 == 0 ? Point3{cx + p[0], p[1], p[2]} : Point3{cx + p[0], -p[2], p[1]});
    }
  }
  return out;
}

PointCloud3 normalize_unit_ball(PointCloud3 x) {
  if (x.empty()) return x;
  Point3 mean{0, 0, 0};
  for (const auto& p : x.points) {
    for (int k = 0; k < 3; ++k) mean[k] += p[k];
  }
  for (auto& m : mean) m /= static_cast<double>(x.size());
  double radius = 0.0;
  for (auto& p : x.points) {
    for (int k = 0; k < 3; ++k) p[k] -= mean[k];
    radius = std::max(radius, std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]));
  }
  if (radius > 0.0) {
    for (auto& p : x.points) {
      for (auto& v : p) v /= radius;
    }
  }
  return x;
}

PointCloud3 gen_torus(const TorusSpec& spec) { return normalize_unit_ball(gen_torus_raw(spec)); }

std::string shape_name(ShapeKind s) {
  switch (s) {
    case ShapeKind::kSphere: return "sphere";
    case ShapeKind::kBox: return "box";
    case ShapeKind::kCylinder: return "cylinder";
    case ShapeKind::kTorus: return "torus";
    case ShapeKind::kCone: return "cone";
  }
  return "?";
}

ShapeKind parse_shape(const std::string& name) {
  for (auto s : kShapeKinds) {
    if (shape_name(s) == name) return s;
  }
  throw DataError("unknown shape '" + name + "'");
}

PointCloud3 sample_shape(ShapeKind kind, std::size_t count, Rng& rng) {
  PointCloud3 x;
  x.points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    switch (kind) {
      case ShapeKind::kSphere: x.points.push_back(sphere_point(rng)); break;
      case ShapeKind::kBox: x.points.push_back(box_point(rng)); break;
      case ShapeKind::kCylinder: x.points.push_back(cylinder_point(rng)); break;
      case ShapeKind::kTorus: x.points.push_back(torus_point(0.7, 0.25, rng)); break;
      case ShapeKind::kCone: x.points.push_back(cone_point(rng)); break;
    }
  }
  return normalize_unit_ball(std::move(x));
}

Scene gen_scene(const SceneSpec& spec) {
  const std::size_t K = spec.playground;
  const std::size_t k = spec.objects.size();
  if (K == 0) throw DataError("playground dimension must be positive");
  if (k == 0) throw DataError("a scene needs at least one object");
  if (k > K * K) {
    throw DataError(std::to_string(k) + " objects do not fit a " + std::to_string(K) + "x" + std::to_string(K) +
                    " playground");
  }
  if (!(spec.cell_fill > 0.0 && spec.cell_fill < 1.0)) throw DataError("cell fill must lie in (0, 1)");
  std::vector<bool> used(K * K, false);
  for (const auto& o : spec.objects) {
    if (o.row >= K || o.col >= K) throw DataError("object cell outside the playground");
    if (used[o.row * K + o.col]) throw DataError("two objects share a cell");
    used[o.row * K + o.col] = true;
    if (!(o.scale > 0.0 && o.scale <= 1.0)) throw DataError("object scale must lie in (0, 1]");
  }
  const double w = 2.0 / static_cast<double>(K);
  Scene scene;
  scene.points.points.reserve(spec.count);
  for (std::size_t i = 0; i < k; ++i) {
    const ObjectSpec& o = spec.objects[i];
    const std::size_t share = spec.count / k + (i < spec.count % k ? 1 : 0);
    Rng rng = Rng::derive(spec.seed, i);
    const auto shape = sample_shape(o.shape, share, rng);
    const double s = 0.5 * spec.cell_fill * w * o.scale;
    const double cy = std::cos(o.yaw), sy = std::sin(o.yaw);
    const double cx0 = -1.0 + (static_cast<double>(o.col) + 0.5) * w;
    const double cy0 = -1.0 + (static_cast<double>(o.row) + 0.5) * w;
    for (const auto& p : shape.points) {
      scene.points.points.push_back({cx0 + s * (cy * p[0] - sy * p[1]), cy0 + s * (sy * p[0] + cy * p[1]), s * p[2]});
      scene.object_of.push_back(static_cast<int>(i));
    }
  }
  return scene;
}

SceneSpec random_scene(std::size_t playground, std::size_t k, std::size_t count, Rng& rng) {
  if (k == 0 || k > playground * playground) {
    throw DataError(std::to_string(k) + " objects do not fit a " + std::to_string(playground) + "x" +
                    std::to_string(playground) + " playground");
  }
  SceneSpec spec;
  spec.playground = playground;
  spec.count = count;
  const auto cells = rng.permutation(playground * playground);
  for (std::size_t i = 0; i < k; ++i) {
    ObjectSpec o;
    o.row = cells[i] / playground;
    o.col = cells[i] % playground;
    o.shape = kShapeKinds[rng.below(5)];
    o.scale = rng.uniform(0.75, 1.0);
    o.yaw = rng.uniform(0.0, 2.0 * kPi);
    spec.objects.push_back(o);
  }
  spec.seed = rng.next_u64();
  return spec;
}

}  // namespace tearing
