#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tearing/data/shapes.hpp"

namespace tearing {

/// One cloud of a dataset with its labels.
struct Sample {
  std::string id;  // "<split>/<index>"
  PointCloud3 points;
  int k = 1;       // object count (1 for tori)
  int genus = 0;   // tori only
  std::array<bool, 5> has{};  // shape presence, in kShapeKinds order
  std::vector<int> object_of;  // per-point object index, scenes only
};

struct DatasetOptions {
  std::optional<std::size_t> train;
  std::optional<std::size_t> test;
  std::optional<std::size_t> points;
};

/// Presets: "torus" (300 clouds, genus uniform over 1..3), "torus16" (16
/// clouds, genus cycling 1..3), "kimo3-mini" (300 train / 60 test scenes,
/// K = 3, k uniform over 1..9), "kimo3" (30000 / 6000), "two-object"
/// (16 scenes on K = 3 alternating k = 1 and k = 2).
std::vector<std::string> dataset_presets();

/// The manifest of a preset: every item's generator spec, labels and file
/// name, with nothing written yet.
nlohmann::json plan_dataset(const std::string& preset, std::uint64_t seed, const DatasetOptions& options = {});

/// Generate a manifest item's cloud; a pure function of the item.
Sample generate_item(const nlohmann::json& item);

/// Write every PLY under `root`, then `root/manifest.json`.
void write_dataset(const nlohmann::json& manifest, const std::filesystem::path& root);

/// Read a manifest; `root` is its directory.
nlohmann::json read_manifest(const std::filesystem::path& manifest_path);

/// Load a split from the PLY files next to the manifest, checking point
/// counts and labels against it.
std::vector<Sample> load_split(const std::filesystem::path& manifest_path, const std::string& split);

}  // namespace tearing
