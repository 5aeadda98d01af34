#include "tearing/data/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <numbers>

#include "tearing/data/ply.hpp"

namespace tearing {

namespace {

using nlohmann::json;

struct Preset {
  std::string family;
  std::size_t train;
  std::size_t test;
  std::size_t playground = 3;
};

Preset preset_of(const std::string& name) {
  if (name == "torus") return {"torus", 300, 0};
  if (name == "torus16") return {"torus", 16, 0};
  if (name == "kimo3-mini") return {"playground", 300, 60};
  if (name == "kimo3") return {"playground", 30000, 6000};
  if (name == "two-object") return {"playground", 16, 0};
  std::string known;
  for (const auto& p : dataset_presets()) known += (known.empty() ? "" : ", ") + p;
  throw DataError("unknown dataset preset '" + name + "' (expected one of " + known + ")");
}

std::string file_name(const std::string& family, const std::string& split, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%05zu.ply", index);
  return family + "/" + split + "/" + buf;
}

json scene_json(const SceneSpec& s) {
  json objects = json::array();
  for (const auto& o : s.objects) {
    objects.push_back({{"shape", shape_name(o.shape)}, {"row", o.row}, {"col", o.col}, {"scale", o.scale}, {"yaw", o.yaw}});
  }
  return {{"playground", s.playground}, {"count", s.count}, {"seed", s.seed}, {"cell_fill", s.cell_fill},
          {"objects", objects}};
}

SceneSpec scene_spec(const json& j) {
  SceneSpec s;
  s.playground = j.at("playground").get<std::size_t>();
  s.count = j.at("count").get<std::size_t>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.cell_fill = j.at("cell_fill").get<double>();
  for (const auto& o : j.at("objects")) {
    s.objects.push_back({parse_shape(o.at("shape").get<std::string>()), o.at("row").get<std::size_t>(),
                         o.at("col").get<std::size_t>(), o.at("scale").get<double>(), o.at("yaw").get<double>()});
  }
  return s;
}

json plan_item(const Preset& p, const std::string& preset, const std::string& split, std::size_t index,
               std::size_t points, Rng& rng) {
  json item{{"id", split + "/" + std::to_string(index)}, {"file", file_name(p.family, split, index)}};
  if (p.family == "torus") {
    TorusSpec t;
    t.genus = preset == "torus16" ? static_cast<int>(index % 3) + 1 : static_cast<int>(rng.below(3)) + 1;
    t.count = points;
    t.seed = rng.next_u64();
    item["torus"] = {{"genus", t.genus}, {"ring_radius", t.ring_radius}, {"tube_radius", t.tube_radius},
                     {"count", t.count}, {"seed", t.seed}};
    item["k"] = 1;
    item["genus"] = t.genus;
    return item;
  }
  std::size_t k;
  if (preset == "two-object") {
    k = index % 2 + 1;
  } else {
    k = static_cast<std::size_t>(rng.below(p.playground * p.playground)) + 1;
  }
  const SceneSpec s = random_scene(p.playground, k, points, rng);
  item["scene"] = scene_json(s);
  item["k"] = k;
  json has = json::object();
  for (auto kind : kShapeKinds) {
    bool present = false;
    for (const auto& o : s.objects) present = present || o.shape == kind;
    has[shape_name(kind)] = present;
  }
  item["has"] = has;
  return item;
}

}  // namespace

std::vector<std::string> dataset_presets() { return {"torus", "torus16", "kimo3-mini", "kimo3", "two-object"}; }

json plan_dataset(const std::string& preset, std::uint64_t seed, const DatasetOptions& options) {
  const Preset p = preset_of(preset);
  const std::size_t points = options.points.value_or(2048);
  if (points == 0) throw DataError("clouds need at least one point");
  json m{{"format", "tearing-dataset"},
         {"version", 1},
         {"preset", preset},
         {"family", p.family},
         {"seed", seed},
         {"points", points}};
  if (p.family == "playground") {
    m["constants"] = {{"playground", p.playground},
                      {"cell_fill", 0.8},
                      {"scale_range", {0.75, 1.0}},
                      {"yaw_range", {0.0, 2.0 * std::numbers::pi}},
                      {"shapes", {"sphere", "box", "cylinder", "torus", "cone"}}};
  } else {
    m["constants"] = {{"ring_radius", 1.0}, {"tube_radius", 0.25}, {"link_spacing", "4R/3"}};
  }
  json splits = json::object();
  const std::pair<std::string, std::size_t> sizes[] = {{"train", options.train.value_or(p.train)},
                                                        {"test", options.test.value_or(p.test)}};
  for (const auto& [split, n] : sizes) {
    if (n == 0) continue;
    Rng rng = Rng::derive(seed, split);
    json items = json::array();
    for (std::size_t i = 0; i < n; ++i) items.push_back(plan_item(p, preset, split, i, points, rng));
    splits[split] = items;
  }
  m["splits"] = splits;
  return m;
}

Sample generate_item(const json& item) {
  Sample s;
  s.id = item.at("id").get<std::string>();
  s.k = item.at("k").get<int>();
  if (item.contains("torus")) {
    const auto& t = item["torus"];
    TorusSpec spec;
    spec.genus = t.at("genus").get<int>();
    spec.ring_radius = t.at("ring_radius").get<double>();
    spec.tube_radius = t.at("tube_radius").get<double>();
    spec.count = t.at("count").get<std::size_t>();
    spec.seed = t.at("seed").get<std::uint64_t>();
    s.genus = spec.genus;
    s.points = gen_torus(spec);
  } else {
    Scene scene = gen_scene(scene_spec(item.at("scene")));
    s.points = std::move(scene.points);
    s.object_of = std::move(scene.object_of);
    const auto& has = item.at("has");
    for (std::size_t i = 0; i < 5; ++i) s.has[i] = has.at(shape_name(kShapeKinds[i])).get<bool>();
  }
  // Clouds live on disk as f32.
  for (auto& p : s.points.points) {
    for (auto& v : p) v = static_cast<float>(v);
  }
  return s;
}

void write_dataset(const json& manifest, const std::filesystem::path& root) {
  std::filesystem::create_directories(root);
  for (const auto& [split, items] : manifest.at("splits").items()) {
    for (const auto& item : items) {
      Sample s = generate_item(item);
      PlyCloud cloud{std::move(s.points), std::nullopt, {}};
      if (!s.object_of.empty()) {
        cloud.attribute_name = "object";
        cloud.attribute = std::move(s.object_of);
      }
      write_ply(root / item.at("file").get<std::string>(), cloud);
    }
  }
  const auto path = root / "manifest.json";
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot write " + path.string());
  os << manifest.dump(2) << '\n';
  if (!os) throw DataError("write failed for " + path.string());
}

json read_manifest(const std::filesystem::path& manifest_path) {
  std::ifstream is(manifest_path, std::ios::binary);
  if (!is) throw DataError("cannot open manifest " + manifest_path.string());
  json m;
  try {
    m = json::parse(is);
  } catch (const json::exception& e) {
    throw DataError(manifest_path.string() + ": " + e.what());
  }
  if (m.value("format", "") != "tearing-dataset") throw DataError(manifest_path.string() + " is not a dataset manifest");
  return m;
}

std::vector<Sample> load_split(const std::filesystem::path& manifest_path, const std::string& split) {
  const json m = read_manifest(manifest_path);
  if (!m.at("splits").contains(split)) {
    throw DataError(manifest_path.string() + " has no '" + split + "' split");
  }
  const auto root = manifest_path.parent_path();
  std::vector<Sample> out;
  for (const auto& item : m["splits"][split]) {
    Sample s;
    s.id = item.at("id").get<std::string>();
    s.k = item.at("k").get<int>();
    s.genus = item.value("genus", 0);
    if (item.contains("has")) {
      for (std::size_t i = 0; i < 5; ++i) s.has[i] = item["has"].at(shape_name(kShapeKinds[i])).get<bool>();
    }
    const auto path = root / item.at("file").get<std::string>();
    PlyCloud cloud = read_ply(path);
    if (cloud.points.size() != m.at("points").get<std::size_t>()) {
      throw DataError(path.string() + ": " + std::to_string(cloud.points.size()) + " points, manifest says " +
                      std::to_string(m["points"].get<std::size_t>()));
    }
    if (cloud.attribute_name) {
      int max_obj = -1;
      for (int a : cloud.attribute) max_obj = std::max(max_obj, a);
      if (max_obj + 1 != s.k) {
        throw DataError(path.string() + ": object labels give " + std::to_string(max_obj + 1) +
                        " objects, manifest says " + std::to_string(s.k));
      }
    }
    s.points = std::move(cloud.points);
    s.object_of = std::move(cloud.attribute);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace tearing
