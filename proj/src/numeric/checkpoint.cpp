#include "tearing/numeric/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace tearing {

static_assert(std::endian::native == std::endian::little, "checkpoint payload is little-endian");

namespace {

constexpr char kMagic[8] = {'T', 'E', 'A', 'R', 'C', 'K', 'P', 'T'};

template <typename T>
constexpr const char* dtype_name() {
  return sizeof(T) == 4 ? "f32" : "f64";
}

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::istream& is, T& v, const std::filesystem::path& path) {
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw CheckpointError("truncated checkpoint header in " + path.string());
  }
}

nlohmann::json read_header(std::istream& is, const std::filesystem::path& path) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw CheckpointError(path.string() + " is not a checkpoint (bad magic)");
  }
  std::uint32_t version = 0;
  read_pod(is, version, path);
  if (version != kCheckpointVersion) {
    throw CheckpointError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  std::uint64_t len = 0;
  read_pod(is, len, path);
  std::string text(len, '\0');
  if (!is.read(text.data(), static_cast<std::streamsize>(len))) {
    throw CheckpointError("truncated checkpoint header in " + path.string());
  }
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(path.string() + ": corrupt header: " + e.what());
  }
}

}  // namespace

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const Checkpoint<T>& ckpt) {
  nlohmann::json h;
  h["dtype"] = dtype_name<T>();
  h["meta"] = ckpt.header;
  nlohmann::json tensors = nlohmann::json::array();
  auto describe = [&](const std::string& name, const Tensor<T>& t, const char* section) {
    tensors.push_back({{"name", name}, {"shape", t.shape()}, {"section", section}});
  };
  const auto& names = ckpt.params.names();
  for (std::size_t i = 0; i < names.size(); ++i) describe(names[i], ckpt.params.at(i), "param");
  if (ckpt.adam) {
    const auto& a = *ckpt.adam;
    if (a.first_moment.size() != names.size() || a.second_moment.size() != names.size()) {
      throw CheckpointError("optimizer state does not match parameter count");
    }
    h["adam"] = {{"step", a.step},
                 {"learning_rate", a.options.learning_rate},
                 {"beta1", a.options.beta1},
                 {"beta2", a.options.beta2},
                 {"epsilon", a.options.epsilon}};
    for (std::size_t i = 0; i < names.size(); ++i) describe(names[i], a.first_moment[i], "adam_m");
    for (std::size_t i = 0; i < names.size(); ++i) describe(names[i], a.second_moment[i], "adam_v");
  } else {
    h["adam"] = nullptr;
  }
  h["tensors"] = std::move(tensors);

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw CheckpointError("cannot write checkpoint " + tmp.string());
    const std::string text = h.dump();
    os.write(kMagic, 8);
    write_pod(os, kCheckpointVersion);
    write_pod(os, static_cast<std::uint64_t>(text.size()));
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    auto payload = [&](const Tensor<T>& t) {
      os.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(T)));
    };
    for (std::size_t i = 0; i < names.size(); ++i) payload(ckpt.params.at(i));
    if (ckpt.adam) {
      for (const auto& t : ckpt.adam->first_moment) payload(t);
      for (const auto& t : ckpt.adam->second_moment) payload(t);
    }
    if (!os) throw CheckpointError("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

nlohmann::json read_checkpoint_header(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open checkpoint " + path.string());
  return read_header(is, path);
}

template <typename T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open checkpoint " + path.string());
  const nlohmann::json h = read_header(is, path);
  if (h.value("dtype", "") != dtype_name<T>()) {
    throw CheckpointError(path.string() + " stores " + h.value("dtype", std::string("?")) +
                          " values, expected " + dtype_name<T>());
  }
  Checkpoint<T> ckpt;
  ckpt.header = h.at("meta");
  const bool has_adam = !h.at("adam").is_null();
  if (has_adam) {
    AdamState<T> a;
    a.step = h["adam"].at("step").get<std::uint64_t>();
    a.options.learning_rate = h["adam"].at("learning_rate").get<double>();
    a.options.beta1 = h["adam"].at("beta1").get<double>();
    a.options.beta2 = h["adam"].at("beta2").get<double>();
    a.options.epsilon = h["adam"].at("epsilon").get<double>();
    ckpt.adam = std::move(a);
  }
  for (const auto& desc : h.at("tensors")) {
    Shape shape = desc.at("shape").get<Shape>();
    Tensor<T> t(shape);
    if (!is.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(T)))) {
      throw CheckpointError(path.string() + ": payload truncated at tensor '" +
                            desc.at("name").get<std::string>() + "'");
    }
    const std::string section = desc.at("section").get<std::string>();
    if (section == "param") {
      ckpt.params.add(desc.at("name").get<std::string>(), std::move(t));
    } else if (section == "adam_m" && has_adam) {
      ckpt.adam->first_moment.push_back(std::move(t));
    } else if (section == "adam_v" && has_adam) {
      ckpt.adam->second_moment.push_back(std::move(t));
    } else {
      throw CheckpointError(path.string() + ": unknown tensor section '" + section + "'");
    }
  }
  return ckpt;
}

template void save_checkpoint<float>(const std::filesystem::path&, const Checkpoint<float>&);
template void save_checkpoint<double>(const std::filesystem::path&, const Checkpoint<double>&);
template Checkpoint<float> load_checkpoint<float>(const std::filesystem::path&);
template Checkpoint<double> load_checkpoint<double>(const std::filesystem::path&);

}  // namespace tearing
