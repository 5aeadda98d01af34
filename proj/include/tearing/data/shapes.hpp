#pragma once

#include <string>
#include <vector>

#include "tearing/geometry/types.hpp"
#include "tearing/numeric/rng.hpp"

namespace tearing {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TorusSpec {
  int genus = 1;
  double ring_radius = 1.0;
  double tube_radius = 0.25;
  std::size_t count = 2048;
  std::uint64_t seed = 0;
};

/// Area-uniform samples of `genus` linked tori before normalization. Torus
/// k is centred at (k * 4R/3, 0, 0); even k lie in the xy-plane, odd k in
/// the xz-plane. Points are split evenly, the first tori taking the extra.
PointCloud3 gen_torus_raw(const TorusSpec& spec);

/// gen_torus_raw centred on its mean and scaled into the unit ball.
PointCloud3 gen_torus(const TorusSpec& spec);

/// Centre on the mean and divide by the largest norm.
PointCloud3 normalize_unit_ball(PointCloud3 x);

enum class ShapeKind { kSphere, kBox, kCylinder, kTorus, kCone };
inline constexpr ShapeKind kShapeKinds[] = {ShapeKind::kSphere, ShapeKind::kBox, ShapeKind::kCylinder,
                                            ShapeKind::kTorus, ShapeKind::kCone};

std::string shape_name(ShapeKind s);
ShapeKind parse_shape(const std::string& name);

/// Area-uniform surface samples of a primitive, normalized to the unit ball.
PointCloud3 sample_shape(ShapeKind kind, std::size_t count, Rng& rng);

struct ObjectSpec {
  ShapeKind shape = ShapeKind::kSphere;
  std::size_t row = 0;
  std::size_t col = 0;
  double scale = 1.0;  // fraction of the largest size that fits the cell
  double yaw = 0.0;    // radians about z
};

struct SceneSpec {
  std::size_t playground = 3;  // K
  std::vector<ObjectSpec> objects;
  std::size_t count = 2048;
  std::uint64_t seed = 0;
  /// Objects fill at most this fraction of the cell width.
  double cell_fill = 0.8;
};

struct Scene {
  PointCloud3 points;
  std::vector<int> object_of;  // per point
};

/// Cell width 2/K; object centres at -1 + (c + 0.5) * 2/K in x and y, z = 0.
Scene gen_scene(const SceneSpec& spec);

/// k distinct random cells, random shapes, scale in [0.75, 1], random yaw.
SceneSpec random_scene(std::size_t playground, std::size_t k, std::size_t count, Rng& rng);

}  // namespace tearing
