#include "tearing/nets/model.hpp"

#include <map>
#include <stdexcept>

namespace tearing {

namespace {

const std::map<Variant, std::string>& names() {
  static const std::map<Variant, std::string> table{
      {Variant::kFoldingNet, "FoldingNet"},         {Variant::kCascadedF, "CascadedF"},
      {Variant::kTearingNet, "TearingNet"},         {Variant::kTearingNetTF, "TearingNet_TF"},
      {Variant::kTearingNetNoGF, "TearingNet_noGF"}, {Variant::kTearingNet3, "TearingNet3"},
  };
  return table;
}

using Layout = std::vector<std::pair<std::string, Shape>>;

// Dense layers prefix.0 .. prefix.(k-1) along the width chain.
void chain(Layout& out, const std::string& prefix, std::size_t in, const std::vector<std::size_t>& hidden,
           std::size_t last) {
  std::vector<std::size_t> widths{in};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(last);
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    const std::string base = prefix + "." + std::to_string(k);
    out.push_back({base + ".weight", {widths[k], widths[k + 1]}});
    out.push_back({base + ".bias", {widths[k + 1]}});
  }
}

void fold_layout(Layout& out, const std::string& prefix, std::size_t in, const Architecture& a) {
  chain(out, prefix + ".stage1", in + a.code_dim, a.fold_hidden, 3);
  chain(out, prefix + ".stage2", 3 + a.code_dim, a.fold_hidden, 3);
}

nlohmann::json widths_json(const std::vector<std::size_t>& w) { return nlohmann::json(w); }

}  // namespace

std::string variant_name(Variant v) { return names().at(v); }

Variant parse_variant(const std::string& name) {
  std::string known;
  for (const auto& [v, n] : names()) {
    if (n == name) return v;
    known += (known.empty() ? "" : ", ") + n;
  }
  throw std::invalid_argument("unknown variant '" + name + "' (expected one of " + known + ")");
}

bool has_tear(Variant v) { return v != Variant::kFoldingNet && v != Variant::kCascadedF; }

bool has_filter(Variant v) {
  return v == Variant::kTearingNet || v == Variant::kTearingNetTF || v == Variant::kTearingNet3;
}

void Architecture::validate() const {
  if (code_dim == 0) throw std::invalid_argument("codeword length must be positive");
  if (point_widths.empty()) throw std::invalid_argument("encoder needs at least one per-point layer");
  for (const auto* w : {&point_widths, &head_widths, &fold_hidden, &tear_hidden}) {
    for (auto v : *w) {
      if (v == 0) throw std::invalid_argument("layer widths must be positive");
    }
  }
  if (tear_mid == 0) throw std::invalid_argument("tearing stage width must be positive");
  if (grid_dim < 2) throw std::invalid_argument("grid dimension must be at least 2");
  if (graph.mode != TearMode::kWeight5D && graph.mode != TearMode::kDistance2D) {
    throw std::invalid_argument("unknown tearing mode");
  }
  graph.validate();
}

Architecture preset_architecture(const std::string& name) {
  Architecture a;
  if (name == "full") return a;
  if (name == "desk") {
    a.code_dim = 128;
    a.point_widths = {16, 32, 256};
    a.head_widths = {128};
    a.fold_hidden = {128, 128};
    a.tear_hidden = {128, 128};
    a.tear_mid = 16;
    a.grid_dim = 23;
    return a;
  }
  if (name == "tiny") {
    a.code_dim = 6;
    a.point_widths = {5, 7};
    a.head_widths = {6};
    a.fold_hidden = {8, 7};
    a.tear_hidden = {7, 6};
    a.tear_mid = 4;
    a.grid_dim = 4;
    // Wide kernel so filter edges survive and carry gradient.
    a.graph.epsilon = 0.5;
    return a;
  }
  throw std::invalid_argument("unknown preset '" + name + "' (expected tiny, desk or full)");
}

nlohmann::json to_json(const ModelConfig& cfg) {
  const Architecture& a = cfg.arch;
  return {
      {"variant", variant_name(cfg.variant)},
      {"code_dim", a.code_dim},
      {"point_widths", widths_json(a.point_widths)},
      {"head_widths", widths_json(a.head_widths)},
      {"fold_hidden", widths_json(a.fold_hidden)},
      {"tear_hidden", widths_json(a.tear_hidden)},
      {"tear_mid", a.tear_mid},
      {"grid_dim", a.grid_dim},
      {"grid_convention", a.convention == GridConvention::kInclusive ? "inclusive" : "cell_centered"},
      {"tear_mode", a.graph.mode == TearMode::kWeight5D ? "weight5d" : "distance2d"},
      {"epsilon", a.graph.epsilon},
      {"keep_threshold", a.graph.keep_threshold},
      {"radius", a.graph.radius},
      {"lambda", a.lambda},
  };
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.variant = parse_variant(j.at("variant").get<std::string>());
  Architecture& a = cfg.arch;
  a.code_dim = j.at("code_dim").get<std::size_t>();
  a.point_widths = j.at("point_widths").get<std::vector<std::size_t>>();
  a.head_widths = j.at("head_widths").get<std::vector<std::size_t>>();
  a.fold_hidden = j.at("fold_hidden").get<std::vector<std::size_t>>();
  a.tear_hidden = j.at("tear_hidden").get<std::vector<std::size_t>>();
  a.tear_mid = j.at("tear_mid").get<std::size_t>();
  a.grid_dim = j.at("grid_dim").get<std::size_t>();
  const auto conv = j.at("grid_convention").get<std::string>();
  if (conv != "inclusive" && conv != "cell_centered") throw std::invalid_argument("unknown grid convention " + conv);
  a.convention = conv == "inclusive" ? GridConvention::kInclusive : GridConvention::kCellCentered;
  const auto mode = j.at("tear_mode").get<std::string>();
  if (mode != "weight5d" && mode != "distance2d") throw std::invalid_argument("unknown tear mode " + mode);
  a.graph.mode = mode == "weight5d" ? TearMode::kWeight5D : TearMode::kDistance2D;
  a.graph.epsilon = j.at("epsilon").get<double>();
  a.graph.keep_threshold = j.at("keep_threshold").get<double>();
  a.graph.radius = j.at("radius").get<double>();
  a.lambda = j.at("lambda").get<double>();
  a.validate();
  return cfg;
}

std::vector<std::pair<std::string, Shape>> parameter_layout(const ModelConfig& cfg) {
  const Architecture& a = cfg.arch;
  a.validate();
  Layout out;
  chain(out, "encoder.point", 3, {a.point_widths.begin(), a.point_widths.end() - 1}, a.point_widths.back());
  chain(out, "encoder.head", a.point_widths.back(), a.head_widths, a.code_dim);
  fold_layout(out, "fold", 2, a);
  if (cfg.variant == Variant::kCascadedF) fold_layout(out, "fold2", 3, a);
  if (has_tear(cfg.variant)) {
    chain(out, "tear.stage1", 2 + 3 + a.code_dim, a.tear_hidden, a.tear_mid);
    chain(out, "tear.stage2", 2 + 3 + a.tear_mid + a.code_dim, a.tear_hidden, 2);
  }
  return out;
}

namespace {
bool is_tear_output(const ModelConfig& cfg, const std::string& name) {
  const std::string last = "tear.stage2." + std::to_string(cfg.arch.tear_hidden.size());
  return name.rfind(last + ".", 0) == 0;
}

template <typename T>
Tensor<T> fresh(const ModelConfig& cfg, const std::string& name, const Shape& shape, Rng& rng) {
  const bool bias = name.size() > 5 && name.compare(name.size() - 5, 5, ".bias") == 0;
  if (bias || is_tear_output(cfg, name)) return Tensor<T>(shape);
  return glorot_uniform<T>(shape[0], shape[1], rng);
}
}  // namespace

template <typename T>
ParameterStore<T> init_parameters(const ModelConfig& cfg, Rng& rng) {
  ParameterStore<T> store;
  for (const auto& [name, shape] : parameter_layout(cfg)) store.add(name, fresh<T>(cfg, name, shape, rng));
  return store;
}

template <typename T>
void check_parameters(const ModelConfig& cfg, const ParameterStore<T>& params) {
  const auto layout = parameter_layout(cfg);
  std::string problems;
  for (const auto& [name, shape] : layout) {
    if (!params.contains(name)) {
      problems += "\n  missing " + name + " " + shape_str(shape);
    } else if (params.get(name).shape() != shape) {
      problems += "\n  " + name + ": expected " + shape_str(shape) + ", found " + shape_str(params.get(name).shape());
    }
  }
  for (const auto& name : params.names()) {
    bool known = false;
    for (const auto& entry : layout) known = known || entry.first == name;
    if (!known) problems += "\n  unexpected " + name;
  }
  if (!problems.empty()) {
    throw ArchitectureMismatch("parameters do not match " + variant_name(cfg.variant) + ":" + problems);
  }
}

template <typename T>
std::vector<std::string> transfer_parameters(const ModelConfig& cfg, const ParameterStore<T>& source, Rng& rng,
                                             ParameterStore<T>& out) {
  out = ParameterStore<T>();
  std::vector<std::string> fresh_names;
  std::string problems;
  for (const auto& [name, shape] : parameter_layout(cfg)) {
    if (source.contains(name)) {
      const auto& t = source.get(name);
      if (t.shape() != shape) {
        problems += "\n  " + name + ": expected " + shape_str(shape) + ", found " + shape_str(t.shape());
        continue;
      }
      out.add(name, t);
    } else {
      out.add(name, fresh<T>(cfg, name, shape, rng));
      fresh_names.push_back(name);
    }
  }
  if (!problems.empty()) throw ArchitectureMismatch("checkpoint does not fit " + variant_name(cfg.variant) + ":" + problems);
  return fresh_names;
}

template ParameterStore<float> init_parameters<float>(const ModelConfig&, Rng&);
template ParameterStore<double> init_parameters<double>(const ModelConfig&, Rng&);
template void check_parameters<float>(const ModelConfig&, const ParameterStore<float>&);
template void check_parameters<double>(const ModelConfig&, const ParameterStore<double>&);
template std::vector<std::string> transfer_parameters<float>(const ModelConfig&, const ParameterStore<float>&, Rng&,
                                                             ParameterStore<float>&);
template std::vector<std::string> transfer_parameters<double>(const ModelConfig&, const ParameterStore<double>&, Rng&,
                                                              ParameterStore<double>&);

}  // namespace tearing
