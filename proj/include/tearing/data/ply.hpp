#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tearing/geometry/types.hpp"

namespace tearing {

class PlyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An ASCII PLY cloud with an optional integer attribute per vertex.
struct PlyCloud {
  PointCloud3 points;
  std::optional<std::string> attribute_name;
  std::vector<int> attribute;
};

/// Coordinates are written as f32 with 9 significant digits, which reads
/// back to the same f32 value.
void write_ply(const std::filesystem::path& path, const PlyCloud& cloud);
void write_ply(const std::filesystem::path& path, const PointCloud3& points);

/// Reads x, y, z (float or double) and at most one extra scalar property.
/// Errors carry the file name and 1-based line number.
PlyCloud read_ply(const std::filesystem::path& path);

}  // namespace tearing
