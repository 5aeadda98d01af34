#include "tearing/train/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <thread>

#include "tearing/metrics/chamfer_op.hpp"
#include "tearing/metrics/metrics.hpp"
#include "tearing/numeric/checkpoint.hpp"

namespace tearing {

namespace {

struct SampleGrad {
  double loss = 0.0;
  GradientSet<float> grads;
};

SampleGrad sample_gradient(const ParameterStore<float>& params, const ModelConfig& cfg, const PointCloud3& x) {
  Tape<float> tape;
  BoundParameters<float> p(tape, params);
  const Var input = tape.constant(cloud_tensor<float>(x));
  const auto f = forward(tape, p, input, cfg);
  const Var loss = chamfer_aug_op(tape, input, f.decoded.output);
  tape.backward(loss);
  return {static_cast<double>(tape.value(loss).item()), p.gradients(tape)};
}

double sample_loss(const ParameterStore<float>& params, const ModelConfig& cfg, const PointCloud3& x) {
  Tape<float> tape;
  BoundParameters<float> p(tape, params);
  const Var input = tape.constant(cloud_tensor<float>(x));
  const auto f = forward(tape, p, input, cfg);
  return static_cast<double>(tape.value(chamfer_aug_op(tape, input, f.decoded.output)).item());
}

/// Run fn(i) for i in [0, n) on up to `workers` threads. Each index is
/// handled by exactly one thread and writes only its own slot.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

nlohmann::json checkpoint_meta(const TrainConfig& cfg, const ModelConfig& model) {
  nlohmann::json m;
  m["model"] = to_json(model);
  m["train"] = to_json(cfg);
  return m;
}

void save(const std::filesystem::path& path, const ParameterStore<float>& params, const AdamState<float>& adam,
          const nlohmann::json& meta) {
  Checkpoint<float> ck;
  ck.header = meta;
  ck.params = params;
  ck.adam = adam;
  save_checkpoint(path, ck);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void TrainConfig::validate() const {
  if (stage != "pretrain" && stage != "finetune") {
    throw std::invalid_argument("stage must be pretrain or finetune, got '" + stage + "'");
  }
  if (stage == "pretrain" && variant != Variant::kFoldingNet) {
    throw std::invalid_argument("pretrain trains the FoldingNet encoder and folding network; got variant " +
                                variant_name(variant));
  }
  if (stage == "finetune" && init_checkpoint.empty()) {
    throw std::invalid_argument("finetune requires a pretrain checkpoint");
  }
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw std::invalid_argument("learning rate must be positive");
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
  if (manifest.empty()) throw std::invalid_argument("no dataset manifest given");
  if (out_dir.empty()) throw std::invalid_argument("no output directory given");
  arch.validate();
}

TrainConfig train_defaults(const std::string& preset, const std::string& stage) {
  TrainConfig c;
  c.preset = preset;
  c.stage = stage;
  c.arch = preset_architecture(preset);
  const bool pre = stage == "pretrain";
  c.variant = pre ? Variant::kFoldingNet : Variant::kTearingNet;
  if (preset == "full") {
    c.epochs = pre ? 640 : 480;
    c.learning_rate = pre ? 2e-4 : 1e-6;
    c.batch_size = 32;
  } else if (preset == "desk") {
    c.epochs = pre ? 40 : 20;
    c.learning_rate = pre ? 1e-3 : 1e-4;
    c.batch_size = 8;
  } else if (preset == "tiny") {
    c.epochs = 2;
    c.learning_rate = 1e-3;
    c.batch_size = 2;
  } else {
    throw std::invalid_argument("unknown preset '" + preset + "' (expected tiny, desk or full)");
  }
  return c;
}

nlohmann::json to_json(const TrainConfig& c) {
  nlohmann::json arch = to_json(ModelConfig{c.variant, c.arch});
  arch.erase("variant");
  return {{"stage", c.stage},
          {"variant", variant_name(c.variant)},
          {"preset", c.preset},
          {"architecture", arch},
          {"epochs", c.epochs},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"manifest", c.manifest.generic_string()},
          {"split", c.split},
          {"init_checkpoint", c.init_checkpoint.generic_string()},
          {"out_dir", c.out_dir.generic_string()},
          {"max_steps", c.max_steps}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
  if (!j.is_object()) throw std::invalid_argument("training config must be a JSON object");
  static const char* known[] = {"stage", "variant", "preset", "architecture", "epochs", "learning_rate",
                                "batch_size", "seed", "manifest", "split", "init_checkpoint", "out_dir",
                                "max_steps", "workers"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
      throw std::invalid_argument("unknown training config key '" + key + "'");
    }
  }
  try {
    if (j.contains("preset")) {
      c.preset = j["preset"].get<std::string>();
      c.arch = preset_architecture(c.preset);
    }
    if (j.contains("stage")) c.stage = j["stage"].get<std::string>();
    if (j.contains("variant")) c.variant = parse_variant(j["variant"].get<std::string>());
    if (j.contains("architecture")) {
      nlohmann::json a = j["architecture"];
      a["variant"] = variant_name(c.variant);
      c.arch = model_config_from_json(a).arch;
    }
    if (j.contains("epochs")) c.epochs = j["epochs"].get<std::size_t>();
    if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<std::size_t>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("manifest")) c.manifest = j["manifest"].get<std::string>();
    if (j.contains("split")) c.split = j["split"].get<std::string>();
    if (j.contains("init_checkpoint")) c.init_checkpoint = j["init_checkpoint"].get<std::string>();
    if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("max_steps")) c.max_steps = j["max_steps"].get<std::size_t>();
    if (j.contains("workers")) c.workers = j["workers"].get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("bad training config value: ") + e.what());
  }
  return c;
}

std::size_t workers_from_env(std::size_t fallback) {
  const char* v = std::getenv("TEARNET_WORKERS");
  if (!v || !*v) return fallback;
  char* end = nullptr;
  const unsigned long n = std::strtoul(v, &end, 10);
  if (*end != '\0' || n == 0) throw std::invalid_argument(std::string("TEARNET_WORKERS must be a positive integer, got '") + v + "'");
  return n;
}

double dataset_loss(const ParameterStore<float>& params, const ModelConfig& cfg, const std::vector<Sample>& samples,
                    std::size_t workers) {
  if (samples.empty()) throw std::invalid_argument("dataset is empty");
  std::vector<double> losses(samples.size());
  parallel_for(samples.size(), workers, [&](std::size_t i) { losses[i] = sample_loss(params, cfg, samples[i].points); });
  double sum = 0.0;
  for (double l : losses) sum += l;
  return sum / static_cast<double>(samples.size());
}

LoadedModel load_model(const std::filesystem::path& checkpoint) {
  auto ck = load_checkpoint<float>(checkpoint);
  if (!ck.header.contains("model")) {
    throw CheckpointError(checkpoint.string() + ": no model configuration in the checkpoint header");
  }
  LoadedModel m;
  m.config = model_config_from_json(ck.header.at("model"));
  check_parameters(m.config, ck.params);
  m.params = std::move(ck.params);
  m.header = std::move(ck.header);
  return m;
}

TrainResult train(const TrainConfig& cfg, std::ostream* progress) {
  cfg.validate();
  const ModelConfig model{cfg.variant, cfg.arch};
  const auto samples = load_split(cfg.manifest, cfg.split);
  if (samples.empty()) throw std::invalid_argument("split '" + cfg.split + "' of " + cfg.manifest.string() + " is empty");

  ParameterStore<float> params;
  Rng init_rng = Rng::derive(cfg.seed, "init");
  if (cfg.stage == "pretrain") {
    params = init_parameters<float>(model, init_rng);
  } else {
    LoadedModel source = load_model(cfg.init_checkpoint);
    // Differing tensor shapes are reported by name first.
    transfer_parameters(model, source.params, init_rng, params);
    if (!(source.config.arch == cfg.arch)) {
      const auto have = to_json(source.config);
      const auto want = to_json(model);
      std::string diff;
      for (const auto& [key, value] : want.items()) {
        if (key == "variant" || have.at(key) == value) continue;
        diff += (diff.empty() ? "" : ", ") + key + " " + have.at(key).dump() + " vs " + value.dump();
      }
      throw ArchitectureMismatch("checkpoint " + cfg.init_checkpoint.string() +
                                 " differs from the configured architecture in " + diff);
    }
  }
  AdamState<float> adam = AdamState<float>::zeros(params, AdamOptions{cfg.learning_rate});

  std::filesystem::create_directories(cfg.out_dir);
  TrainResult result;
  result.best = cfg.out_dir / "best.ckpt";
  result.last = cfg.out_dir / "last.ckpt";
  const std::filesystem::path log_path = cfg.out_dir / "train_log.csv";
  std::ofstream log(log_path, std::ios::binary | std::ios::trunc);
  if (!log) throw std::runtime_error("cannot write " + log_path.string());
  log << "epoch,loss,wall_time\n";

  nlohmann::json meta = checkpoint_meta(cfg, model);
  result.initial_loss = dataset_loss(params, model, samples, cfg.workers);
  meta["initial_loss"] = result.initial_loss;
  meta["epoch"] = 0;
  meta["steps"] = 0;
  if (progress) *progress << "initial loss " << format_double(result.initial_loss) << "\n";

  double best_loss = std::numeric_limits<double>::infinity();
  {
    nlohmann::json m = meta;
    m["loss"] = result.initial_loss;
    save(result.best, params, adam, m);
    save(result.last, params, adam, m);
  }

  const auto t0 = std::chrono::steady_clock::now();
  bool stop = false;
  for (std::size_t epoch = 1; epoch <= cfg.epochs && !stop; ++epoch) {
    Rng order_rng = Rng::derive(cfg.seed, "epoch." + std::to_string(epoch));
    const auto order = order_rng.permutation(samples.size());
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      if (cfg.max_steps != 0 && result.steps >= cfg.max_steps) {
        stop = true;
        break;
      }
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      std::vector<SampleGrad> slots(end - begin);
      parallel_for(slots.size(), cfg.workers, [&](std::size_t i) {
        slots[i] = sample_gradient(params, model, samples[order[begin + i]].points);
      });
      double batch_loss = 0.0;
      GradientSet<float> grads = std::move(slots[0].grads);
      batch_loss += slots[0].loss;
      for (std::size_t i = 1; i < slots.size(); ++i) {
        accumulate(grads, slots[i].grads);
        batch_loss += slots[i].loss;
      }
      if (!std::isfinite(batch_loss)) {
        throw NumericFailure("non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                             std::to_string(result.steps + 1) + "; last good checkpoint is " + result.last.string());
      }
      const float scale = 1.0f / static_cast<float>(slots.size());
      for (auto& g : grads) {
        for (float& v : g.values()) v *= scale;
      }
      try {
        adam_step(params, grads, adam);
      } catch (const NonFiniteGradient& e) {
        throw NumericFailure(std::string(e.what()) + " at epoch " + std::to_string(epoch) +
                             "; last good checkpoint is " + result.last.string());
      }
      ++result.steps;
      loss_sum += batch_loss;
      seen += slots.size();
    }
    if (seen == 0) break;
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const EpochLog entry{epoch, loss_sum / static_cast<double>(seen), seconds};
    result.log.push_back(entry);
    log << entry.epoch << ',' << format_double(entry.loss) << ',' << format_double(entry.seconds) << '\n';
    log.flush();
    if (progress) *progress << "epoch " << epoch << " loss " << format_double(entry.loss) << "\n";

    nlohmann::json m = meta;
    m["epoch"] = epoch;
    m["steps"] = result.steps;
    m["loss"] = entry.loss;
    save(result.last, params, adam, m);
    if (entry.loss < best_loss) {
      best_loss = entry.loss;
      save(result.best, params, adam, m);
    }
  }

  result.final_loss = dataset_loss(params, model, samples, cfg.workers);
  nlohmann::json m = meta;
  m["epoch"] = result.log.empty() ? 0 : result.log.back().epoch;
  m["steps"] = result.steps;
  m["loss"] = result.log.empty() ? result.initial_loss : result.log.back().loss;
  m["final_loss"] = result.final_loss;
  save(result.last, params, adam, m);
  if (result.log.empty()) save(result.best, params, adam, m);
  if (progress) *progress << "final loss " << format_double(result.final_loss) << "\n";
  return result;
}

EvalReport evaluate(const LoadedModel& model, const std::filesystem::path& manifest, const EvalOptions& options) {
  const auto samples = load_split(manifest, options.split);
  if (samples.empty()) throw std::invalid_argument("split '" + options.split + "' of " + manifest.string() + " is empty");
  EvalReport report;
  report.dataset = read_manifest(manifest).value("preset", manifest.parent_path().filename().string());
  report.variant = variant_name(model.config.variant);
  report.seed = options.seed;
  report.samples.resize(samples.size());
  parallel_for(samples.size(), options.workers, [&](std::size_t i) {
    const auto& s = samples[i];
    const Reconstruction r = reconstruct<float>(model.params, model.config, s.points);
    SampleMetrics& out = report.samples[i];
    out.id = s.id;
    PointCloud3 cloud = r.output;
    if (r.torn) {
      out.edges = r.torn->edges.size();
      out.components = connected_components(*r.torn);
      PointCloud3 kept = remove_isolated(r.output, *r.torn);
      if (!kept.empty()) cloud = std::move(kept);
    }
    out.kept = cloud.size();
    out.cd = chamfer_aug(s.points, cloud);
    out.emd = emd_subsampled(s.points, cloud, options.emd_points, mix_seed(options.seed, i));
  });
  double cd = 0.0, emd_sum = 0.0;
  for (const auto& s : report.samples) {
    cd += s.cd;
    emd_sum += s.emd;
  }
  report.cd = 100.0 * cd / static_cast<double>(samples.size());
  report.emd = emd_sum / static_cast<double>(samples.size());
  return report;
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<EvalReport>& reports) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "# CD is the mean augmented Chamfer distance x100; EMD is the mean assignment cost divided by n\n";
  os << "dataset,variant,CD,EMD,seed\n";
  for (const auto& r : reports) {
    os << r.dataset << ',' << r.variant << ',' << format_double(r.cd) << ',' << format_double(r.emd) << ','
       << r.seed << '\n';
  }
}

}  // namespace tearing
