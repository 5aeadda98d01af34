#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>

#include <json.hpp>

#include "tearing/numeric/adam.hpp"

namespace tearing {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Named parameters, optional optimizer state and a free-form JSON header
/// (model configuration, variant tag, training metadata). The on-disk
/// layout is described in docs/checkpoint.md.
template <typename T>
struct Checkpoint {
  nlohmann::json header = nlohmann::json::object();
  ParameterStore<T> params;
  std::optional<AdamState<T>> adam;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const Checkpoint<T>& ckpt);

template <typename T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path);

/// Header only, without reading the payload.
nlohmann::json read_checkpoint_header(const std::filesystem::path& path);

}  // namespace tearing
