#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tearing/data/dataset.hpp"
#include "tearing/nets/network.hpp"

namespace tearing {

class NumericFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  std::string stage = "pretrain";  // pretrain: fresh weights; finetune: from init_checkpoint
  Variant variant = Variant::kFoldingNet;
  std::string preset = "desk";
  Architecture arch = preset_architecture("desk");
  std::size_t epochs = 1;
  double learning_rate = 1e-3;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
  std::filesystem::path manifest;
  std::string split = "train";
  std::filesystem::path init_checkpoint;
  std::filesystem::path out_dir;
  /// Stop after this many Adam steps (0 = no limit).
  std::size_t max_steps = 0;
  /// Forward/backward threads per batch; results do not depend on it.
  std::size_t workers = 1;

  void validate() const;
};

/// Stage defaults for a preset: "full" (640 epochs at 2e-4 then 480 at
/// 1e-6, batch 32), "desk" and "tiny".
TrainConfig train_defaults(const std::string& preset, const std::string& stage);

nlohmann::json to_json(const TrainConfig& cfg);
/// Missing keys keep the values of `base`.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base);

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;      // mean per-sample loss during the epoch
  double seconds = 0.0;
};

struct TrainResult {
  std::filesystem::path best;
  std::filesystem::path last;
  std::vector<EpochLog> log;
  double initial_loss = 0.0;  // dataset loss before the first update
  double final_loss = 0.0;    // dataset loss of the last parameters
  std::size_t steps = 0;
};

/// Worker count from TEARNET_WORKERS, else `fallback`.
std::size_t workers_from_env(std::size_t fallback = 1);

TrainResult train(const TrainConfig& cfg, std::ostream* progress = nullptr);

/// A model restored from a checkpoint.
struct LoadedModel {
  ModelConfig config;
  ParameterStore<float> params;
  nlohmann::json header;
};

LoadedModel load_model(const std::filesystem::path& checkpoint);

/// Mean augmented Chamfer loss of the model output over `samples`, summed in
/// order; the value training logs and checkpoints record.
double dataset_loss(const ParameterStore<float>& params, const ModelConfig& cfg, const std::vector<Sample>& samples,
                    std::size_t workers = 1);

struct SampleMetrics {
  std::string id;
  double cd = 0.0;   // augmented Chamfer, unscaled
  double emd = 0.0;
  std::size_t kept = 0;  // output points after isolated-point removal
  std::size_t edges = 0;
  std::size_t components = 0;
};

struct EvalReport {
  std::string dataset;
  std::string variant;
  std::uint64_t seed = 0;
  double cd = 0.0;   // mean, multiplied by 100
  double emd = 0.0;  // mean
  std::vector<SampleMetrics> samples;
};

struct EvalOptions {
  std::string split = "test";
  std::size_t emd_points = 256;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

/// CD and EMD of the variant's final output against each input. Torn
/// variants drop isolated output points first (unless that would drop all).
EvalReport evaluate(const LoadedModel& model, const std::filesystem::path& manifest, const EvalOptions& options);

/// Rows "dataset,variant,CD,EMD,seed" under a '#' note on the units.
void write_metrics_csv(const std::filesystem::path& path, const std::vector<EvalReport>& reports);

}  // namespace tearing
