#include "cli.hpp"

#include <chrono>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "tearing/data/ply.hpp"
#include "tearing/downstream/downstream.hpp"
#include "tearing/numeric/checkpoint.hpp"

#ifndef TEARNET_VERSION
#define TEARNET_VERSION "dev"
#endif

namespace tearing::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json flag_value(const std::string& s) {
  try {
    json v = json::parse(s);
    if (v.is_number() || v.is_boolean()) return v;
  } catch (const json::exception&) {
  }
  return s;
}

/// One subcommand: its flags, the keys they set, and the action.
struct Command {
  CLI::App* app = nullptr;
  std::string config_path;
  std::map<std::string, std::string> scalar;  // key -> raw flag text
  std::map<std::string, std::vector<std::string>> lists;
  std::vector<std::pair<std::string, CLI::Option*>> flags;
  std::vector<std::pair<std::string, CLI::Option*>> list_flags;
  std::set<std::string> keys;  // accepted configuration keys
  json defaults = json::object();
  std::function<json(const json&, std::ostream&, std::ostream&)> action;  // returns {inputs, outputs}

  void option(const std::string& key, const std::string& help) {
    const std::string flag = "--" + key_to_flag(key);
    flags.emplace_back(key, app->add_option(flag, scalar[key], help));
    keys.insert(key);
  }
  void list_option(const std::string& key, const std::string& help) {
    const std::string flag = "--" + key_to_flag(key);
    list_flags.emplace_back(key, app->add_option(flag, lists[key], help));
    keys.insert(key);
  }
  static std::string key_to_flag(std::string key) {
    for (char& ch : key) {
      if (ch == '_') ch = '-';
    }
    return key;
  }

  /// defaults <- config file <- flags.
  json resolve() const {
    json cfg = defaults;
    if (!config_path.empty()) {
      std::ifstream is(config_path);
      if (!is) throw IoError("cannot read config file " + config_path);
      json file;
      try {
        file = json::parse(is);
      } catch (const json::exception& e) {
        throw UsageError("config file " + config_path + " is not valid JSON: " + e.what());
      }
      if (!file.is_object()) throw UsageError("config file " + config_path + " must hold a JSON object");
      for (const auto& [k, v] : file.items()) {
        if (!keys.count(k)) throw UsageError("unknown key '" + k + "' in " + config_path);
        cfg[k] = v;
      }
    }
    for (const auto& [key, opt] : flags) {
      if (opt->count() > 0) cfg[key] = flag_value(scalar.at(key));
    }
    for (const auto& [key, opt] : list_flags) {
      if (opt->count() > 0) {
        json arr = json::array();
        for (const auto& s : lists.at(key)) arr.push_back(flag_value(s));
        cfg[key] = arr;
      }
    }
    return cfg;
  }
};

template <typename V>
V get(const json& cfg, const std::string& key) {
  if (!cfg.contains(key) || cfg[key].is_null()) throw UsageError("missing required setting '" + key + "' (flag --" + Command::key_to_flag(key) + ")");
  try {
    return cfg[key].get<V>();
  } catch (const json::exception&) {
    throw UsageError("setting '" + key + "' has the wrong type: " + cfg[key].dump());
  }
}

template <typename V>
V get(const json& cfg, const std::string& key, V fallback) {
  if (!cfg.contains(key) || cfg[key].is_null()) return fallback;
  return get<V>(cfg, key);
}

std::uint64_t seed_of(const json& cfg) {
  if (!cfg.contains("seed")) throw UsageError("a seed is required (--seed <u64> or \"seed\" in the config file)");
  return get<std::uint64_t>(cfg, "seed");
}

std::vector<std::size_t> indices_of(const json& cfg) {
  if (!cfg.contains("index")) return {0};
  if (cfg["index"].is_array()) return get<std::vector<std::size_t>>(cfg, "index");
  return {get<std::size_t>(cfg, "index")};
}

std::vector<std::string> strings_of(const json& cfg, const std::string& key) {
  if (!cfg.contains(key)) throw UsageError("missing required setting '" + key + "'");
  if (cfg[key].is_array()) {
    std::vector<std::string> out;
    for (const auto& v : cfg[key]) out.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    return out;
  }
  return {get<std::string>(cfg, key)};
}

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::is_regular_file(p)) throw IoError(what + " not found: " + p.string());
}

LoadedModel load(const fs::path& checkpoint) {
  require_file(checkpoint, "checkpoint");
  return load_model(checkpoint);
}

Sample sample_at(const fs::path& manifest, const std::string& split, std::size_t index) {
  auto samples = load_split(manifest, split);
  if (index >= samples.size()) {
    throw UsageError("index " + std::to_string(index) + " out of range; split '" + split + "' has " +
                     std::to_string(samples.size()) + " clouds");
  }
  return std::move(samples[index]);
}

std::string safe_id(std::string id) {
  for (char& ch : id) {
    if (ch == '/') ch = '_';
  }
  return id;
}

json paths(const std::vector<fs::path>& ps) {
  json a = json::array();
  for (const auto& p : ps) a.push_back(p.generic_string());
  return a;
}

// --- subcommands ----------------------------------------------------------

json cmd_synth(const json& cfg, std::ostream& out, std::ostream&) {
  const auto preset = get<std::string>(cfg, "preset");
  const fs::path root = get<std::string>(cfg, "out");
  DatasetOptions opt;
  if (cfg.contains("train")) opt.train = get<std::size_t>(cfg, "train");
  if (cfg.contains("test")) opt.test = get<std::size_t>(cfg, "test");
  if (cfg.contains("points")) opt.points = get<std::size_t>(cfg, "points");
  json manifest;
  try {
    manifest = plan_dataset(preset, seed_of(cfg), opt);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
  write_dataset(manifest, root);
  std::size_t files = 0;
  for (const auto& [split, items] : manifest["splits"].items()) files += items.size();
  out << "wrote " << files << " clouds and " << (root / "manifest.json").string() << "\n";
  return {{"inputs", json::array()}, {"outputs", paths({root / "manifest.json"})}};
}

json cmd_train(const json& cfg, std::ostream& out, std::ostream&) {
  const std::string preset = get<std::string>(cfg, "preset", "desk");
  const std::string stage = get<std::string>(cfg, "stage", "pretrain");
  TrainConfig tc;
  try {
    tc = train_defaults(preset, stage);
    json rest = cfg;
    rest.erase("config");
    rest.erase("out");
    rest.erase("checkpoint");
    rest.erase("preset");
    rest.erase("stage");
    tc = train_config_from_json(rest, tc);
    tc.stage = stage;
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  tc.seed = seed_of(cfg);
  tc.out_dir = get<std::string>(cfg, "out");
  if (cfg.contains("checkpoint")) tc.init_checkpoint = get<std::string>(cfg, "checkpoint");
  if (!cfg.contains("workers")) tc.workers = workers_from_env(tc.workers);
  try {
    tc.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  require_file(tc.manifest, "dataset manifest");
  if (!tc.init_checkpoint.empty()) require_file(tc.init_checkpoint, "checkpoint");
  const auto r = train(tc, &out);
  std::vector<fs::path> inputs{tc.manifest};
  if (!tc.init_checkpoint.empty()) inputs.push_back(tc.init_checkpoint);
  return {{"inputs", paths(inputs)},
          {"outputs", paths({r.best, r.last, tc.out_dir / "train_log.csv"})},
          {"resolved", to_json(tc)}};
}

json cmd_eval(const json& cfg, std::ostream& out, std::ostream&) {
  const fs::path manifest = get<std::string>(cfg, "manifest");
  require_file(manifest, "dataset manifest");
  const fs::path dir = get<std::string>(cfg, "out");
  EvalOptions opt;
  opt.split = get<std::string>(cfg, "split", "test");
  opt.emd_points = get<std::size_t>(cfg, "emd_points", 256);
  opt.seed = seed_of(cfg);
  opt.workers = get<std::size_t>(cfg, "workers", workers_from_env(1));
  std::vector<EvalReport> reports;
  std::vector<fs::path> inputs{manifest};
  for (const auto& ck : strings_of(cfg, "checkpoint")) {
    reports.push_back(evaluate(load(ck), manifest, opt));
    inputs.push_back(ck);
    out << reports.back().variant << " CD(x100) " << reports.back().cd << " EMD " << reports.back().emd << "\n";
  }
  write_metrics_csv(dir / "metrics.csv", reports);
  std::ofstream os(dir / "eval_samples.csv", std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + (dir / "eval_samples.csv").string());
  os << "variant,id,cd,emd,kept,edges,components\n";
  char buf[64];
  for (const auto& r : reports) {
    for (const auto& s : r.samples) {
      os << r.variant << ',' << s.id;
      std::snprintf(buf, sizeof buf, ",%.17g,%.17g,", s.cd, s.emd);
      os << buf << s.kept << ',' << s.edges << ',' << s.components << '\n';
    }
  }
  return {{"inputs", paths(inputs)}, {"outputs", paths({dir / "metrics.csv", dir / "eval_samples.csv"})}};
}

json cmd_reconstruct(const json& cfg, std::ostream& out, std::ostream&) {
  const auto model = load(get<std::string>(cfg, "checkpoint"));
  const fs::path manifest = get<std::string>(cfg, "manifest");
  require_file(manifest, "dataset manifest");
  const std::string split = get<std::string>(cfg, "split", "test");
  const fs::path root = get<std::string>(cfg, "out");
  seed_of(cfg);
  const std::size_t n = model.config.arch.grid_dim;
  std::vector<fs::path> written;
  for (std::size_t index : indices_of(cfg)) {
    const Sample s = sample_at(manifest, split, index);
    const fs::path dir = root / safe_id(s.id);
    const Reconstruction r = reconstruct<float>(model.params, model.config, s.points);
    auto emit_ply = [&](const std::string& name, const PointCloud3& x) {
      write_ply(dir / name, x);
      written.push_back(dir / name);
    };
    emit_ply("input.ply", s.points);
    if (r.x1) emit_ply("x1.ply", *r.x1);
    if (r.x2) emit_ply("x2.ply", *r.x2);
    if (r.x3) emit_ply("x3.ply", *r.x3);
    emit_ply("output.ply", r.output);
    write_points2_csv(r.u0, dir / "u0.csv");
    written.push_back(dir / "u0.csv");
    if (r.u1) {
      write_points2_csv(*r.u1, dir / "u1.csv");
      written.push_back(dir / "u1.csv");
    }
    const SparseGraph graph = r.torn ? *r.torn : grid_graph(r.u0, model.config.arch.graph);
    write_graph_csv(graph, dir / "graph.csv");
    write_obj(extract_mesh(n, graph, r.output), dir / "mesh.obj");
    written.push_back(dir / "graph.csv");
    written.push_back(dir / "mesh.obj");
    out << s.id << ": " << graph.edges.size() << " edges, " << connected_components(graph) << " components -> "
        << dir.string() << "\n";
  }
  return {{"inputs", paths({get<std::string>(cfg, "checkpoint"), manifest})}, {"outputs", paths(written)}};
}

json cmd_resample(const json& cfg, std::ostream& out, std::ostream&) {
  const auto model = load(get<std::string>(cfg, "checkpoint"));
  const fs::path manifest = get<std::string>(cfg, "manifest");
  require_file(manifest, "dataset manifest");
  const std::string split = get<std::string>(cfg, "split", "test");
  const std::size_t count = get<std::size_t>(cfg, "count", 2048);
  const fs::path root = get<std::string>(cfg, "out");
  const std::uint64_t seed = seed_of(cfg);
  const std::size_t n = model.config.arch.grid_dim;
  std::vector<fs::path> written;
  for (std::size_t index : indices_of(cfg)) {
    const Sample s = sample_at(manifest, split, index);
    const Reconstruction r = reconstruct<float>(model.params, model.config, s.points);
    const SparseGraph graph = r.torn ? *r.torn : grid_graph(r.u0, model.config.arch.graph);
    Tensor<float> code(Shape{1, r.codeword.size()});
    for (std::size_t j = 0; j < r.codeword.size(); ++j) code[j] = static_cast<float>(r.codeword[j]);
    const PointwiseDecoder decoder = [&](const PointSet2& u) {
      return decode_points<float>(model.params, model.config, code, u);
    };
    Rng rng = Rng::derive(seed, "resample." + s.id);
    const auto res = resample(decoder, count, n, surviving_faces(n, graph), rng, 100, model.config.arch.convention);
    const fs::path file = root / (safe_id(s.id) + "_resampled.ply");
    write_ply(file, res.points);
    written.push_back(file);
    out << s.id << ": kept " << res.accepted << " of " << res.drawn << " draws -> " << file.string() << "\n";
  }
  return {{"inputs", paths({get<std::string>(cfg, "checkpoint"), manifest})}, {"outputs", paths(written)}};
}

json cmd_codes(const json& cfg, std::ostream& out, std::ostream&) {
  const fs::path ck = get<std::string>(cfg, "checkpoint");
  const auto model = load(ck);
  const fs::path manifest = get<std::string>(cfg, "manifest");
  require_file(manifest, "dataset manifest");
  const fs::path file = fs::path(get<std::string>(cfg, "out")) / "codes.csv";
  seed_of(cfg);
  const auto table = extract_codes(model, manifest, get<std::string>(cfg, "split", "test"),
                                   get<std::size_t>(cfg, "workers", workers_from_env(1)));
  write_codes_csv(file, table);
  out << table.size() << " codewords of width " << table.dim() << " -> " << file.string() << "\n";
  return {{"inputs", paths({ck, manifest})}, {"outputs", paths({file})}};
}

SvmOptions svm_options(const json& cfg) {
  SvmOptions o;
  o.c = get<double>(cfg, "c", o.c);
  o.iterations = get<std::size_t>(cfg, "iterations", o.iterations);
  o.standardize = get<bool>(cfg, "standardize", o.standardize);
  if (!(o.c > 0.0) || o.iterations == 0) throw UsageError("classifier needs c > 0 and iterations > 0");
  return o;
}

json cmd_count(const json& cfg, std::ostream& out, std::ostream& err) {
  const fs::path codes = get<std::string>(cfg, "codes");
  require_file(codes, "codeword table");
  const auto table = read_codes_csv(codes);
  const std::uint64_t seed = seed_of(cfg);
  const std::size_t folds = get<std::size_t>(cfg, "folds", 4);
  const std::string variant = get<std::string>(cfg, "variant", "unspecified");
  const SvmOptions o = svm_options(cfg);
  const auto r = count_cv(table, seed, folds, o);
  for (const auto& w : r.warnings) err << "warning: " << w << "\n";
  std::vector<ResultRow> rows{{"count", variant, "mae", r.mae, seed},
                              {"count", variant, "mae_x10", 10.0 * r.mae, seed},
                              {"count", variant, "mae_majority", r.mae_majority, seed},
                              {"count", variant, "mae_shuffled", r.mae_shuffled, seed},
                              {"count", variant, "mae_chance", r.mae_chance, seed}};
  for (std::size_t f = 0; f < r.fold_mae.size(); ++f) {
    rows.push_back({"count", variant, "mae_fold" + std::to_string(f), r.fold_mae[f], seed});
  }
  bool any_torus = false, all_torus = true;
  for (const auto& h : table.has) {
    any_torus |= h[3];
    all_torus &= h[3];
  }
  if (any_torus && !all_torus) {
    const auto p = presence_cv(table, 3, seed, folds, o);
    for (const auto& w : p.warnings) err << "warning: " << w << "\n";
    rows.push_back({"torus_presence_analog", variant, "accuracy", p.accuracy, seed});
    rows.push_back({"torus_presence_analog", variant, "majority_accuracy", p.majority_accuracy, seed});
  }
  const fs::path file = fs::path(get<std::string>(cfg, "out")) / "count.csv";
  write_results_csv(file, rows);
  out << "count MAE " << r.mae << " (x10: " << 10.0 * r.mae << "), majority " << r.mae_majority << ", shuffled "
      << r.mae_shuffled << ", chance " << r.mae_chance << "\n";
  return {{"inputs", paths({codes})}, {"outputs", paths({file})}};
}

json cmd_dk(const json& cfg, std::ostream& out, std::ostream& err) {
  const fs::path codes = get<std::string>(cfg, "codes");
  require_file(codes, "codeword table");
  seed_of(cfg);
  const auto r = dk_analysis(read_codes_csv(codes));
  for (const auto& w : r.warnings) err << "warning: " << w << "\n";
  const fs::path file = fs::path(get<std::string>(cfg, "out")) / "dk.csv";
  write_dk_csv(file, r);
  for (const auto& row : r.rows) out << "k=" << row.k << " d=" << row.d << " (raw " << row.d_raw << ")\n";
  return {{"inputs", paths({codes})}, {"outputs", paths({file})}};
}

class GradcheckFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json cmd_gradcheck(const json& cfg, std::ostream& out, std::ostream&) {
  const std::string preset = get<std::string>(cfg, "preset", "tiny");
  const std::uint64_t seed = seed_of(cfg);
  const std::size_t seeds = get<std::size_t>(cfg, "seeds", 20);
  const double tolerance = get<double>(cfg, "tolerance", 1e-4);
  const std::size_t points = get<std::size_t>(cfg, "points", 10);
  std::vector<Variant> variants;
  if (cfg.contains("variant")) {
    for (const auto& v : strings_of(cfg, "variant")) {
      try {
        variants.push_back(parse_variant(v));
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
    }
  } else {
    variants = {Variant::kFoldingNet,   Variant::kCascadedF,      Variant::kTearingNet,
                Variant::kTearingNetTF, Variant::kTearingNetNoGF, Variant::kTearingNet3};
  }
  Architecture arch;
  try {
    arch = preset_architecture(preset);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  json rows = json::array();
  double worst = 0.0;
  for (Variant v : variants) {
    GradCheckResult vw;
    for (std::size_t s = 0; s < seeds; ++s) {
      const auto r = network_gradcheck({v, arch}, mix_seed(seed, s), points);
      if (r.max_relative_error >= vw.max_relative_error) vw = r;
    }
    worst = std::max(worst, vw.max_relative_error);
    out << variant_name(v) << " max relative error " << vw.max_relative_error << " (" << vw.worst_parameter << "["
        << vw.worst_index << "])" << (vw.max_relative_error <= tolerance ? "" : "  FAIL") << "\n";
    rows.push_back({{"variant", variant_name(v)}, {"max_relative_error", vw.max_relative_error}});
  }
  out << "max relative error " << worst << " over " << variants.size() << " variants x " << seeds << " seeds\n";
  std::vector<fs::path> written;
  if (cfg.contains("out")) {
    const fs::path file = fs::path(get<std::string>(cfg, "out")) / "gradcheck.csv";
    fs::create_directories(file.parent_path());
    std::ofstream os(file, std::ios::binary | std::ios::trunc);
    os << "variant,max_relative_error\n";
    char buf[40];
    for (const auto& r : rows) {
      std::snprintf(buf, sizeof buf, "%.17g", r["max_relative_error"].get<double>());
      os << r["variant"].get<std::string>() << ',' << buf << '\n';
    }
    written.push_back(file);
  }
  json result = {{"inputs", json::array()}, {"outputs", paths(written)}, {"max_relative_error", worst}};
  if (worst > tolerance) result["failed"] = true;
  return result;
}

void write_run_manifest(const fs::path& dir, const std::string& command, const json& cfg, const json& io,
                        double seconds) {
  json m;
  m["command"] = command;
  m["config"] = io.contains("resolved") ? io["resolved"] : cfg;
  m["seed"] = cfg.value("seed", json());
  m["tool_version"] = TEARNET_VERSION;
  m["inputs"] = io.value("inputs", json::array());
  m["outputs"] = io.value("outputs", json::array());
  m["wall_time_seconds"] = seconds;
  fs::create_directories(dir);
  std::ofstream os(dir / "run_manifest.json", std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + (dir / "run_manifest.json").string());
  os << m.dump(2) << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Point-cloud autoencoder toolkit: synthetic data, training, evaluation and codeword analyses",
               "tearnet"};
  app.require_subcommand(1);
  app.set_version_flag("--version", TEARNET_VERSION);

  std::map<std::string, Command> commands;
  auto add = [&](const std::string& name, const std::string& help, auto action) -> Command& {
    Command& c = commands[name];
    c.app = app.add_subcommand(name, help);
    c.app->add_option("--config", c.config_path, "JSON file of settings; flags override it");
    c.keys.insert("config");
    c.option("seed", "master seed (required)");
    c.option("out", "output directory");
    c.action = action;
    return c;
  };

  {
    auto& c = add("synth", "generate a dataset preset as PLY files plus manifest.json", cmd_synth);
    c.option("preset", "torus, torus16, kimo3-mini, kimo3 or two-object");
    c.option("train", "override the training-split size");
    c.option("test", "override the test-split size");
    c.option("points", "override the points per cloud");
  }
  {
    auto& c = add("train", "pretrain (FoldingNet) or finetune a variant from a checkpoint", cmd_train);
    c.option("preset", "architecture and schedule preset: tiny, desk or full");
    c.option("stage", "pretrain or finetune");
    c.option("variant", "FoldingNet, CascadedF, TearingNet, TearingNet_TF, TearingNet_noGF, TearingNet3");
    c.option("manifest", "dataset manifest.json");
    c.option("split", "split to train on");
    c.option("checkpoint", "pretrained checkpoint (finetune)");
    c.option("epochs", "epochs");
    c.option("learning_rate", "Adam learning rate");
    c.option("batch_size", "batch size");
    c.option("max_steps", "stop after this many updates (0 = no limit)");
    c.option("workers", "parallel workers per batch");
    c.keys.insert({"architecture", "init_checkpoint", "out_dir"});
  }
  {
    auto& c = add("eval", "CD and EMD of checkpoints on a split, written to metrics.csv", cmd_eval);
    c.list_option("checkpoint", "checkpoint to evaluate (repeatable)");
    c.option("manifest", "dataset manifest.json");
    c.option("split", "split to evaluate");
    c.option("emd_points", "points per side for EMD");
    c.option("workers", "parallel workers");
  }
  {
    auto& c = add("reconstruct", "dump x1, x2, x3, u0, u1, torn graph and mesh of chosen clouds", cmd_reconstruct);
    c.option("checkpoint", "checkpoint");
    c.option("manifest", "dataset manifest.json");
    c.option("split", "split");
    c.list_option("index", "cloud index within the split (repeatable)");
  }
  {
    auto& c = add("resample", "sample new points on the surviving faces of the torn primitive", cmd_resample);
    c.option("checkpoint", "checkpoint");
    c.option("manifest", "dataset manifest.json");
    c.option("split", "split");
    c.list_option("index", "cloud index within the split (repeatable)");
    c.option("count", "points to draw");
  }
  {
    auto& c = add("codes", "export encoder codewords of a split to codes.csv", cmd_codes);
    c.option("checkpoint", "checkpoint");
    c.option("manifest", "dataset manifest.json");
    c.option("split", "split");
    c.option("workers", "parallel workers");
  }
  {
    auto& c = add("count", "object counting MAE with k-fold cross-validation on codes.csv", cmd_count);
    c.option("codes", "codes.csv");
    c.option("folds", "number of folds");
    c.option("variant", "label for the results rows");
    c.option("c", "hinge-loss weight");
    c.option("iterations", "subgradient iterations");
    c.option("standardize", "z-score features (true/false)");
  }
  {
    auto& c = add("dk", "distance of each count's codewords to the largest count's mean", cmd_dk);
    c.option("codes", "codes.csv");
  }
  {
    auto& c = add("gradcheck", "finite-difference check of every network variant", cmd_gradcheck);
    c.option("preset", "architecture preset (default tiny)");
    c.option("seeds", "seeds per variant");
    c.option("tolerance", "maximum relative error");
    c.option("points", "input points");
    c.list_option("variant", "variant to check (repeatable; default all)");
  }

  std::vector<std::string> argv_rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kOk : kUsage;
  }

  for (auto& [name, c] : commands) {
    if (!c.app->parsed()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const json cfg = c.resolve();
      const json io = c.action(cfg, out, err);
      const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (cfg.contains("out")) write_run_manifest(get<std::string>(cfg, "out"), name, cfg, io, seconds);
      if (io.value("failed", false)) {
        err << "error: gradient check exceeded the tolerance\n";
        return kNumeric;
      }
      return kOk;
    } catch (const UsageError& e) {
      err << "error: " << e.what() << "\n";
      return kUsage;
    } catch (const ArchitectureMismatch& e) {
      err << "error: configuration does not match checkpoint: " << e.what() << "\n";
      return kMismatch;
    } catch (const NumericFailure& e) {
      err << "error: " << e.what() << "\n";
      return kNumeric;
    } catch (const ResampleError& e) {
      err << "error: " << e.what() << "\n";
      return kNumeric;
    } catch (const IoError& e) {
      err << "error: " << e.what() << "\n";
      return kIo;
    } catch (const CheckpointError& e) {
      err << "error: " << e.what() << "\n";
      return kIo;
    } catch (const PlyError& e) {
      err << "error: " << e.what() << "\n";
      return kIo;
    } catch (const DataError& e) {
      err << "error: " << e.what() << "\n";
      return kIo;
    } catch (const TableError& e) {
      err << "error: " << e.what() << "\n";
      return kIo;
    } catch (const fs::filesystem_error& e) {
      err << "error: " << e.what() << "\n";
      return kIo;
    } catch (const std::invalid_argument& e) {
      err << "error: " << e.what() << "\n";
      return kUsage;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kInternal;
    }
  }
  return kInternal;
}

}  // namespace tearing::cli
