#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tearing/geometry/types.hpp"
#include "tearing/numeric/params.hpp"

namespace tearing {

enum class Variant { kFoldingNet, kCascadedF, kTearingNet, kTearingNetTF, kTearingNetNoGF, kTearingNet3 };

std::string variant_name(Variant v);
/// Throws std::invalid_argument naming the accepted tags.
Variant parse_variant(const std::string& name);
bool has_tear(Variant v);
bool has_filter(Variant v);

/// Layer widths and decoder geometry. Hidden widths exclude the fixed input
/// and output widths (3 into the encoder, d out of it, 3 out of F, 2 out of T).
struct Architecture {
  std::size_t code_dim = 512;
  std::vector<std::size_t> point_widths{64, 128, 1024};
  std::vector<std::size_t> head_widths{512};
  std::vector<std::size_t> fold_hidden{512, 512};
  std::vector<std::size_t> tear_hidden{512, 512};
  std::size_t tear_mid = 64;
  std::size_t grid_dim = 45;
  GridConvention convention = GridConvention::kInclusive;
  GraphConfig graph;  // 5D weight mode, eps 0.02
  double lambda = 0.5;

  void validate() const;
  friend bool operator==(const Architecture&, const Architecture&) = default;
};

struct ModelConfig {
  Variant variant = Variant::kTearingNet;
  Architecture arch;
};

/// Named presets: "tiny" (gradient checks), "desk", "full".
Architecture preset_architecture(const std::string& name);

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// Parameter names and shapes for a variant, in store order.
std::vector<std::pair<std::string, Shape>> parameter_layout(const ModelConfig& cfg);

/// Glorot-uniform weights, zero biases; T's last layer is all zeros so the
/// tearing residual starts at exactly zero.
template <typename T>
ParameterStore<T> init_parameters(const ModelConfig& cfg, Rng& rng);

class ArchitectureMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Check a store against the layout, naming missing, unexpected or
/// differently shaped tensors.
template <typename T>
void check_parameters(const ModelConfig& cfg, const ParameterStore<T>& params);

/// Build a store for `cfg` from `source`: tensors with matching names are
/// copied (shape mismatch throws ArchitectureMismatch), the rest are freshly
/// initialized. Returns the names that were initialized.
template <typename T>
std::vector<std::string> transfer_parameters(const ModelConfig& cfg, const ParameterStore<T>& source, Rng& rng,
                                             ParameterStore<T>& out);

}  // namespace tearing
